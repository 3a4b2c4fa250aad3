#pragma once

#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "opfkit/network.hpp"

namespace opfkit {

// Named operating assumptions for the SCE feeders.
//   paper-peak  loads at peak, capacitors switched on, PV at nameplate with q = 0
//   worst-case  every load device relaxed to [p, 0] x [q, 0]
//   bad-case    data unchanged
enum class Preset { kPaperPeak, kWorstCase, kBadCase };

std::optional<Preset> parse_preset(std::string_view name);
const char* preset_name(Preset preset);

// Bound transformation for a preset (identity for paper-peak and bad-case).
Network apply_preset(const Network& net, Preset preset);

// Single injection vector under the paper-peak assumptions. Non-load devices
// contribute their upper real power and reactive power clamped towards 0.
BusVector peak_operating_point(const Network& net);

// Uniform sample from each device's set; discrete sets sample their points.
// Throws ModelError on unbounded sets.
BusVector sample_injections(const Network& net, std::mt19937_64& rng);

struct BundledFile {
  std::string name;  // file name, e.g. "sce47.json"
  std::string text;
};

std::vector<BundledFile> bundled_files();
// "sce47", "sce56" or "twobus_counterexample".
Network bundled_network(std::string_view name);

}  // namespace opfkit
