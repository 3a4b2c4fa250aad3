#pragma once

#include <string>
#include <string_view>

#include "opfkit/network.hpp"

namespace opfkit {

// Network file format (UTF-8 JSON):
//   {"base": {"v_base_kv", "s_base_mva"},                      optional
//    "substation": {"id", "v0_pu" | "v0_sq", "cost"},
//    "buses": [{"id", "vmin_pu" | "vmin_sq", "vmax_pu" | "vmax_sq",
//               "injection": {...} | "injections": [{...}], "cost"}],
//    "lines": [{"from", "to", "r", "x", "unit": "ohm" | "pu"}]}
// Injection objects carry "kind" plus kind fields, an optional "role" and
// "unit": "pu" (default) or "mva" (divided by s_base_mva).
Network parse_network(std::string_view json_text);
Network load_network(const std::string& path);

// Per-unit, squared voltage keys, merged topology. parse_network() of the
// result compares equal to the input network.
std::string network_to_json(const Network& net);

// [{"bus": id, "p": number, "q": number}, ...] in per unit. Buses not
// listed inject zero. The substation may not appear.
BusVector parse_injections(const Network& net, std::string_view json_text);
BusVector load_injections(const Network& net, const std::string& path);
std::string injections_to_json(const Network& net, const BusVector& s);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace opfkit
