#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "opfkit/network_io.hpp"
#include "opfkit/scenarios.hpp"

namespace opfkit {

namespace {

using nlohmann::json;

struct LineRow {
  int from;
  int to;
  double r_ohm;
  double x_ohm;
};

struct Feeder {
  double v_base_kv;
  double s_base_mva;
  std::vector<LineRow> lines;
  std::map<int, double> loads_mva;
  std::map<int, double> pv_mw;
  std::map<int, double> caps_mvar;
};

// SCE 47-bus feeder, substation at bus 1.
const Feeder& sce47() {
  static const Feeder f{
      12.35,
      1.0,
      {{1, 2, 0.259, 0.808},   {2, 13, 0.0, 0.0},      {2, 3, 0.031, 0.092},
       {3, 4, 0.046, 0.092},   {3, 14, 0.092, 0.031},  {3, 15, 0.214, 0.046},
       {4, 20, 0.336, 0.061},  {4, 5, 0.107, 0.183},   {5, 26, 0.061, 0.015},
       {5, 6, 0.015, 0.031},   {6, 27, 0.168, 0.061},  {6, 7, 0.031, 0.046},
       {7, 32, 0.076, 0.015},  {7, 8, 0.015, 0.015},   {8, 40, 0.046, 0.015},
       {8, 39, 0.244, 0.046},  {8, 41, 0.107, 0.031},  {8, 35, 0.076, 0.015},
       {8, 9, 0.031, 0.031},   {9, 10, 0.015, 0.015},  {9, 42, 0.153, 0.046},
       {10, 11, 0.107, 0.076}, {10, 46, 0.229, 0.122}, {11, 47, 0.031, 0.015},
       {11, 12, 0.076, 0.046}, {15, 18, 0.046, 0.015}, {15, 16, 0.107, 0.015},
       {16, 17, 0.0, 0.0},     {18, 19, 0.0, 0.0},     {20, 21, 0.122, 0.092},
       {20, 25, 0.214, 0.046}, {21, 24, 0.0, 0.0},     {21, 22, 0.198, 0.046},
       {22, 23, 0.0, 0.0},     {27, 31, 0.046, 0.015}, {27, 28, 0.107, 0.031},
       {28, 29, 0.107, 0.031}, {29, 30, 0.061, 0.015}, {32, 33, 0.046, 0.015},
       {33, 34, 0.031, 0.010}, {35, 36, 0.076, 0.015}, {35, 37, 0.076, 0.046},
       {35, 38, 0.107, 0.015}, {42, 43, 0.061, 0.015}, {43, 44, 0.061, 0.015},
       {43, 45, 0.061, 0.015}},
      {{1, 30.0},  {11, 0.67}, {12, 0.45}, {14, 0.89}, {16, 0.07}, {18, 0.67}, {21, 0.45},
       {22, 2.23}, {25, 0.45}, {26, 0.2},  {28, 0.13}, {29, 0.13}, {30, 0.2},  {31, 0.07},
       {32, 0.13}, {33, 0.27}, {34, 0.2},  {36, 0.27}, {38, 0.45}, {39, 1.34}, {40, 0.13},
       {41, 0.67}, {42, 0.13}, {44, 0.45}, {45, 0.2},  {46, 0.45}},
      {{13, 1.5}, {17, 0.4}, {19, 1.5}, {23, 1.0}, {24, 2.0}},
      {{1, 6.0}, {3, 1.2}, {37, 1.8}, {47, 1.8}},
  };
  return f;
}

// SCE 56-bus feeder, substation at bus 1.
const Feeder& sce56() {
  static const Feeder f{
      12.0,
      1.0,
      {{1, 2, 0.160, 0.388},   {2, 3, 0.824, 0.315},   {2, 4, 0.144, 0.349},
       {4, 5, 1.026, 0.421},   {4, 6, 0.741, 0.466},   {4, 7, 0.528, 0.468},
       {7, 8, 0.358, 0.314},   {8, 9, 2.032, 0.798},   {8, 10, 0.502, 0.441},
       {10, 11, 0.372, 0.327}, {11, 12, 1.431, 0.999}, {11, 13, 0.429, 0.377},
       {13, 14, 0.671, 0.257}, {13, 15, 0.457, 0.401}, {15, 16, 1.008, 0.385},
       {15, 17, 0.153, 0.134}, {17, 18, 0.971, 0.722}, {18, 19, 1.885, 0.721},
       {4, 20, 0.138, 0.334},  {20, 21, 0.251, 0.096}, {21, 22, 1.818, 0.695},
       {20, 23, 0.225, 0.542}, {23, 24, 0.127, 0.028}, {23, 25, 0.284, 0.687},
       {25, 26, 0.171, 0.414}, {26, 27, 0.414, 0.386}, {27, 28, 0.210, 0.196},
       {28, 29, 0.395, 0.369}, {29, 30, 0.248, 0.232}, {30, 31, 0.279, 0.260},
       {26, 32, 0.205, 0.495}, {32, 33, 0.263, 0.073}, {32, 34, 0.071, 0.171},
       {34, 35, 0.625, 0.273}, {34, 36, 0.510, 0.209}, {36, 37, 2.018, 0.829},
       {34, 38, 1.062, 0.406}, {38, 39, 0.610, 0.238}, {39, 40, 2.349, 0.964},
       {34, 41, 0.115, 0.278}, {41, 42, 0.159, 0.384}, {42, 43, 0.934, 0.383},
       {42, 44, 0.506, 0.163}, {42, 45, 0.095, 0.195}, {42, 46, 1.915, 0.769},
       {41, 47, 0.157, 0.379}, {47, 48, 1.641, 0.670}, {47, 49, 0.081, 0.196},
       {49, 50, 1.727, 0.709}, {49, 51, 0.112, 0.270}, {51, 52, 0.674, 0.275},
       {51, 53, 0.070, 0.170}, {53, 54, 2.041, 0.780}, {53, 55, 0.813, 0.334},
       {53, 56, 0.141, 0.340}},
      {{3, 0.057},  {5, 0.121},  {6, 0.049},  {7, 0.053},  {8, 0.047},  {9, 0.068},
       {10, 0.048}, {11, 0.067}, {12, 0.094}, {14, 0.057}, {16, 0.053}, {17, 0.057},
       {18, 0.112}, {19, 0.087}, {22, 0.063}, {24, 0.135}, {25, 0.100}, {27, 0.048},
       {28, 0.038}, {29, 0.044}, {31, 0.053}, {32, 0.223}, {33, 0.123}, {34, 0.067},
       {35, 0.094}, {36, 0.097}, {37, 0.281}, {38, 0.117}, {39, 0.131}, {40, 0.030},
       {41, 0.046}, {42, 0.054}, {43, 0.083}, {44, 0.057}, {46, 0.134}, {47, 0.045},
       {48, 0.196}, {50, 0.045}, {52, 0.315}, {54, 0.061}, {55, 0.055}, {56, 0.130}},
      {{45, 5.0}},
      {{19, 0.6}, {21, 0.6}, {30, 0.6}, {53, 0.6}},
  };
  return f;
}

std::string feeder_json(const Feeder& f) {
  json root;
  root["base"] = {{"v_base_kv", f.v_base_kv}, {"s_base_mva", f.s_base_mva}};
  root["substation"] = {{"id", 1}, {"v0_pu", 1.0}, {"cost", {{"kind", "linear"}, {"a", 1.0}, {"b", 0.0}}}};
  int max_id = 1;
  for (const LineRow& l : f.lines) max_id = std::max({max_id, l.from, l.to});
  json buses = json::array();
  for (int id = 1; id <= max_id; ++id) {
    json b;
    b["id"] = id;
    b["vmin_pu"] = 0.95;
    b["vmax_pu"] = 1.05;
    json devices = json::array();
    if (auto it = f.loads_mva.find(id); it != f.loads_mva.end()) {
      devices.push_back({{"kind", "fixed"}, {"role", "load"}, {"unit", "mva"},
                         {"s_peak", it->second}, {"pf", 0.97}});
    }
    if (auto it = f.caps_mvar.find(id); it != f.caps_mvar.end()) {
      devices.push_back({{"kind", "capacitor"}, {"role", "capacitor"}, {"unit", "mva"},
                         {"q_cap", it->second}});
    }
    if (auto it = f.pv_mw.find(id); it != f.pv_mw.end()) {
      devices.push_back({{"kind", "box"}, {"role", "pv"}, {"unit", "mva"}, {"p_lo", 0.0},
                         {"p_hi", it->second}, {"q_lo", 0.0}, {"q_hi", 0.0}});
    }
    if (!devices.empty()) b["injections"] = devices;
    buses.push_back(b);
  }
  root["buses"] = buses;
  json lines = json::array();
  for (const LineRow& l : f.lines) {
    lines.push_back({{"from", l.from}, {"to", l.to}, {"r", l.r_ohm}, {"x", l.x_ohm}, {"unit", "ohm"}});
  }
  root["lines"] = lines;
  return root.dump(2) + "\n";
}

// Two buses, y = 2 - 4i. Objective is loss plus curtailment: f0(x) = x at
// the substation and f1 = 1 at the generator (x + (1 - x)).
std::string counterexample_json() {
  json root;
  root["substation"] = {{"id", 0}, {"v0_sq", 1.0}, {"cost", {{"kind", "linear"}, {"a", 1.0}, {"b", 0.0}}}};
  root["buses"] = json::array(
      {{{"id", 1},
        {"vmin_sq", 0.9},
        {"vmax_sq", 1.1},
        {"injection",
         {{"kind", "box"}, {"role", "pv"}, {"p_lo", 0.0}, {"p_hi", 1.0}, {"q_lo", 0.0}, {"q_hi", 0.0}}},
        {"cost", {{"kind", "linear"}, {"a", 0.0}, {"b", 1.0}}}}});
  root["lines"] = json::array({{{"from", 0}, {"to", 1}, {"r", 0.1}, {"x", 0.2}, {"unit", "pu"}}});
  return root.dump(2) + "\n";
}

std::string ieee13_stub_json() {
  json root;
  root["status"] = "stub";
  root["description"] =
      "IEEE 13-node feeder reduced to a single-phase radial model. Load data is not bundled; "
      "this file is not a loadable network.";
  root["adjustment_procedure"] = json::array({
      "Treat every bus as three-phase and split each load uniformly among the phases.",
      "Decouple the phases so the feeder becomes three identical single-phase networks.",
      "Keep switches in their normal state, model the regulator as the substation (fixed voltage), "
      "drop split transformers and place their load on the primary side.",
      "Fill in per-phase loads and line impedances from the published test-case documents, then "
      "write a network file in the sce47.json format.",
  });
  root["topology"] = json::array({{650, 632}, {632, 633}, {633, 634}, {632, 645}, {645, 646},
                                  {632, 671}, {671, 680}, {671, 684}, {684, 611}, {684, 652},
                                  {671, 692}, {692, 675}});
  return root.dump(2) + "\n";
}

}  // namespace

std::vector<BundledFile> bundled_files() {
  return {{"sce47.json", feeder_json(sce47())},
          {"sce56.json", feeder_json(sce56())},
          {"twobus_counterexample.json", counterexample_json()},
          {"ieee13_stub.json", ieee13_stub_json()}};
}

Network bundled_network(std::string_view name) {
  if (name == "sce47") return parse_network(feeder_json(sce47()));
  if (name == "sce56") return parse_network(feeder_json(sce56()));
  if (name == "twobus_counterexample") return parse_network(counterexample_json());
  throw ModelError("no bundled network named \"" + std::string(name) + "\"");
}

}  // namespace opfkit
