#pragma once

#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace opfkit {

using Complex = std::complex<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Raised for malformed or non-radial input.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Injection sets, per unit. Real part is consumption-negative.
struct FixedInjection {
  Complex s;
  bool operator==(const FixedInjection&) const = default;
};

struct BoxInjection {
  double p_lo = 0.0;
  double p_hi = 0.0;
  double q_lo = 0.0;
  double q_hi = 0.0;
  bool operator==(const BoxInjection&) const = default;
};

// {0, i q_cap}. Discrete; see convexify().
struct CapacitorInjection {
  double q_cap = 0.0;
  bool operator==(const CapacitorInjection&) const = default;
};

// 0 <= p <= p_cap, |s| <= s_cap.
struct InverterPvInjection {
  double p_cap = 0.0;
  double s_cap = 0.0;
  bool operator==(const InverterPvInjection&) const = default;
};

// p in [p_lo, p_hi], q = p tan(acos(eta)).
struct ConstantPfInjection {
  double p_lo = 0.0;
  double p_hi = 0.0;
  double eta = 1.0;
  double q_ratio() const;
  bool operator==(const ConstantPfInjection&) const = default;
};

using InjectionSet = std::variant<FixedInjection, BoxInjection, CapacitorInjection,
                                  InverterPvInjection, ConstantPfInjection>;

struct InjectionBox {
  double p_lo = 0.0;
  double p_hi = 0.0;
  double q_lo = 0.0;
  double q_hi = 0.0;
  bool operator==(const InjectionBox&) const = default;
};

InjectionBox operator+(const InjectionBox& a, const InjectionBox& b);

InjectionBox injection_box(const InjectionSet& set);

struct ConvexifiedInjection {
  InjectionSet set;
  bool relaxed = false;  // true when a discrete set was replaced by its hull
};

ConvexifiedInjection convexify(const InjectionSet& set);

const char* injection_kind(const InjectionSet& set);

enum class DeviceRole { kGeneric, kLoad, kCapacitor, kPv };

const char* role_name(DeviceRole role);

struct Device {
  InjectionSet set;
  DeviceRole role = DeviceRole::kGeneric;
  bool operator==(const Device&) const = default;
};

// f(x) = a x + b
struct LinearCost {
  double a = 0.0;
  double b = 0.0;
  bool operator==(const LinearCost&) const = default;
};

// f(x) = a2 x^2 + a1 x + a0, a2 >= 0
struct QuadraticCost {
  double a2 = 0.0;
  double a1 = 0.0;
  double a0 = 0.0;
  bool operator==(const QuadraticCost&) const = default;
};

using CostFunction = std::variant<LinearCost, QuadraticCost>;

double evaluate(const CostFunction& f, double x);
bool is_zero_cost(const CostFunction& f);

struct Bus {
  int id = 0;
  double v_min = 0.0;  // squared magnitude
  double v_max = kInf;
  std::vector<Device> devices;
  CostFunction cost = LinearCost{};
  bool operator==(const Bus&) const = default;
};

// Oriented child -> parent; child index is always line index + 1.
struct Line {
  std::size_t child = 0;
  std::size_t parent = 0;
  double r = 0.0;
  double x = 0.0;
  Complex z() const { return {r, x}; }
  bool operator==(const Line&) const = default;
};

struct BaseSystem {
  double v_base_kv = 1.0;
  double s_base_mva = 1.0;
  double z_base() const { return v_base_kv * v_base_kv / s_base_mva; }
  bool operator==(const BaseSystem&) const = default;
};

// Undirected line as read from input, impedance already in per unit.
struct RawLine {
  int from = 0;
  int to = 0;
  double r = 0.0;
  double x = 0.0;
};

struct NetworkData {
  std::optional<BaseSystem> base;
  int substation_id = 0;
  double v0 = 1.0;
  std::vector<Bus> buses;  // substation included or added
  std::vector<RawLine> lines;
};

struct MergeRecord {
  int kept_id = 0;
  int removed_id = 0;
  bool operator==(const MergeRecord&) const = default;
};

class Network {
 public:
  // Validates, orients away from the substation and merges zero-impedance lines.
  static Network assemble(NetworkData data);

  std::size_t bus_count() const { return buses_.size(); }
  std::size_t line_count() const { return lines_.size(); }

  const Bus& bus(std::size_t i) const { return buses_.at(i); }
  const std::vector<Bus>& buses() const { return buses_; }
  const Line& line(std::size_t k) const { return lines_.at(k); }
  const std::vector<Line>& lines() const { return lines_; }

  static std::size_t line_of(std::size_t bus) { return bus - 1; }
  std::size_t parent(std::size_t bus) const { return lines_.at(bus - 1).parent; }
  const std::vector<std::size_t>& children(std::size_t bus) const { return children_.at(bus); }
  int depth(std::size_t bus) const { return depth_.at(bus); }

  // Lines from the bus up to the substation, nearest first.
  std::vector<std::size_t> path_to_root(std::size_t bus) const;
  // Buses in the subtree below a line, the line's child first.
  std::vector<std::size_t> subtree_buses(std::size_t line) const;

  std::optional<std::size_t> index_of(int id) const;
  std::size_t index_of_checked(int id) const;

  double v0() const { return v0_; }
  const std::optional<BaseSystem>& base() const { return base_; }
  const std::vector<MergeRecord>& merges() const { return merges_; }

  // Minkowski sum of device boxes at a bus; empty sum is {0}.
  InjectionBox bus_box(std::size_t bus) const;

  // Copy with the device lists replaced, bus by bus. Topology untouched.
  Network with_devices(const std::vector<std::vector<Device>>& devices) const;
  Network with_costs(const std::vector<CostFunction>& costs) const;

  bool operator==(const Network& other) const;

 private:
  void index();

  std::optional<BaseSystem> base_;
  double v0_ = 1.0;
  std::vector<Bus> buses_;
  std::vector<Line> lines_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<int> depth_;
  std::vector<MergeRecord> merges_;
};

// Per-bus complex vector of length bus_count(); entry 0 is the substation.
using BusVector = std::vector<Complex>;

void check_bus_vector(const Network& net, const BusVector& s, const char* what);

}  // namespace opfkit
