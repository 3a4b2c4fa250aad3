#include "opfkit/solution_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>

#include <json.hpp>

#include "opfkit/network_io.hpp"

namespace opfkit {

namespace {

using nlohmann::json;

json num(double x) {
  if (!std::isfinite(x)) return x > 0 ? json("inf") : (x < 0 ? json("-inf") : json(nullptr));
  return round_significant(x);
}

double read(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw ModelError(std::string("solution file: missing number \"") + key + "\"");
  }
  return j.at(key).get<double>();
}

}  // namespace

double round_significant(double x, int digits) {
  if (!std::isfinite(x) || x == 0.0) return x;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return std::strtod(buf, nullptr);
}

std::string solution_to_json(const Network& net, const RelaxationResult& r, Variant variant,
                             ObjectiveKind objective, double exact_tol) {
  json root;
  const BranchFlowPoint& w = r.point;
  std::optional<PowerFlowSolution> pf;
  if (r.exact) pf = recover_voltages(net, w, exact_tol);
  json buses = json::array();
  for (std::size_t i = 0; i < net.bus_count(); ++i) {
    json b;
    b["id"] = net.bus(i).id;
    b["p"] = num(w.s[i].real());
    b["q"] = num(w.s[i].imag());
    b["v"] = num(w.v[i]);
    b["v_mag"] = num(std::sqrt(std::max(w.v[i], 0.0)));
    b["v_angle_rad"] = pf ? num(std::arg(pf->voltage[i])) : json(nullptr);
    buses.push_back(b);
  }
  root["buses"] = buses;
  json lines = json::array();
  for (std::size_t k = 0; k < net.line_count(); ++k) {
    const Line& l = net.line(k);
    lines.push_back({{"child", net.bus(l.child).id},
                     {"parent", net.bus(l.parent).id},
                     {"P", num(w.S[k].real())},
                     {"Q", num(w.S[k].imag())},
                     {"ell", num(w.ell[k])},
                     {"gap", num(r.gap[k])}});
  }
  root["lines"] = lines;
  root["s0"] = {{"p", num(w.s[0].real())}, {"q", num(w.s[0].imag())}};
  root["objective"] = num(r.objective);
  root["objective_kind"] = objective_name(objective);
  root["variant"] = variant_name(variant);
  root["exact"] = r.exact;
  root["max_relative_gap"] = num(r.max_gap);
  root["relaxed_discrete"] = r.relaxed_discrete;
  root["solver_stats"] = {{"status", status_name(r.status)},
                          {"iterations", r.raw.iterations},
                          {"primal_residual", num(r.raw.primal_residual)},
                          {"dual_residual", num(r.raw.dual_residual)},
                          {"duality_gap", num(r.raw.gap)}};
  return root.dump(2) + "\n";
}

BranchFlowPoint parse_solution(const Network& net, std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ModelError(std::string("malformed solution JSON: ") + e.what());
  }
  try {
    BranchFlowPoint w;
    w.s.assign(net.bus_count(), Complex(0.0, 0.0));
    w.v.assign(net.bus_count(), net.v0());
    w.S.assign(net.line_count(), Complex(0.0, 0.0));
    w.ell.assign(net.line_count(), 0.0);
    std::set<std::size_t> buses, lines;
    for (const json& b : root.at("buses")) {
      const std::size_t i = net.index_of_checked(b.at("id").get<int>());
      buses.insert(i);
      w.s[i] = {read(b, "p"), read(b, "q")};
      w.v[i] = read(b, "v");
    }
    for (const json& l : root.at("lines")) {
      const std::size_t child = net.index_of_checked(l.at("child").get<int>());
      if (child == 0) throw ModelError("solution file: substation listed as a line child");
      const std::size_t k = Network::line_of(child);
      if (net.bus(net.line(k).parent).id != l.at("parent").get<int>()) {
        throw ModelError("solution file: line orientation does not match the network");
      }
      lines.insert(k);
      w.S[k] = {read(l, "P"), read(l, "Q")};
      w.ell[k] = read(l, "ell");
    }
    if (buses.size() != net.bus_count() || lines.size() != net.line_count()) {
      throw ModelError("solution file does not cover every bus and line of the network");
    }
    if (root.contains("s0")) w.s[0] = {read(root.at("s0"), "p"), read(root.at("s0"), "q")};
    return w;
  } catch (const json::exception& e) {
    throw ModelError(std::string("invalid solution JSON: ") + e.what());
  }
}

BranchFlowPoint load_solution(const Network& net, const std::string& path) {
  return parse_solution(net, read_text_file(path));
}

}  // namespace opfkit
