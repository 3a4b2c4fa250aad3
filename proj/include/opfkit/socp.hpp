#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "opfkit/conic.hpp"
#include "opfkit/network.hpp"
#include "opfkit/powerflow.hpp"

namespace opfkit {

// kSocpM replaces the voltage upper bound v <= v_max by the affine bound
// W-hat(s) <= v_max on the injections.
enum class Variant { kSocp, kSocpM };
enum class ObjectiveKind { kLoss, kSumCost };

const char* variant_name(Variant v);
const char* objective_name(ObjectiveKind o);
std::optional<Variant> parse_variant(std::string_view s);
std::optional<ObjectiveKind> parse_objective(std::string_view s);

// Variable indices into the cone program. -1 marks "not a variable".
struct RelaxationLayout {
  std::vector<std::vector<int>> device_p, device_q;  // bus-indexed, per device
  std::vector<int> P, Q, ell;                        // line-indexed
  std::vector<int> v;                                // bus-indexed, v[0] = -1
  int p0 = -1;
  int q0 = -1;
  bool relaxed_discrete = false;  // a capacitor was replaced by its hull
};

struct Relaxation {
  ConeProgram program;
  RelaxationLayout layout;
  Variant variant = Variant::kSocp;
  ObjectiveKind objective = ObjectiveKind::kLoss;
};

Relaxation build_relaxation(const Network& net, Variant variant, ObjectiveKind objective);

struct SolveSettings {
  ConicSettings conic;
  double exact_tol = 1e-6;  // max relative cone gap
};

struct RelaxationResult {
  ConicStatus status = ConicStatus::kNumericalError;
  BranchFlowPoint point;
  double objective = 0.0;
  std::vector<double> gap;  // relative, line-indexed
  double max_gap = 0.0;
  bool exact = false;
  bool relaxed_discrete = false;
  ConicSolution raw;
};

RelaxationResult solve_relaxation(const Network& net, Variant variant, ObjectiveKind objective,
                                  const SolveSettings& settings = {});

BranchFlowPoint extract_point(const Network& net, const RelaxationLayout& layout,
                              const Eigen::VectorXd& x);

// l v_i - |S|^2 per line.
std::vector<double> exactness_gap(const Network& net, const BranchFlowPoint& w);
// Gap divided by (l v_i + 1).
std::vector<double> relative_gap(const Network& net, const BranchFlowPoint& w);
double max_relative_gap(const Network& net, const BranchFlowPoint& w);
bool is_exact(const Network& net, const BranchFlowPoint& w, double tol = 1e-6);

// Angles from the root outward. Throws ModelError when the point is not exact.
PowerFlowSolution recover_voltages(const Network& net, const BranchFlowPoint& w, double tol = 1e-6);

// kLoss: sum r l. kSumCost: sum over all buses of f_i(Re s_i).
double objective_value(const Network& net, const BranchFlowPoint& w, ObjectiveKind objective);

struct LinearBoundMargins {
  std::vector<double> P;  // Re(S-hat) - P, line-indexed
  std::vector<double> Q;
  std::vector<double> v;  // W-hat - v, bus-indexed
  double min_margin = 0.0;
};

LinearBoundMargins check_linear_bounds(const Network& net, const BranchFlowPoint& w);

// Residuals of the branch-flow equalities and bounds, for auditing points.
struct FeasibilityReport {
  double voltage_drop = 0.0;      // max voltage drop residual
  double power_balance = 0.0;     // max |flow conservation residual|
  double voltage_lower = 0.0;     // max violation of v >= v_min
  double voltage_upper = 0.0;     // max violation of v <= v_max
  double linear_upper = 0.0;      // max violation of W-hat(s) <= v_max
  double cone = 0.0;              // max violation of l v >= |S|^2
  double injection = 0.0;         // max distance outside the convexified sets
  double worst(Variant variant) const;
};

FeasibilityReport check_feasibility(const Network& net, const BranchFlowPoint& w);

struct CapacitorChoice {
  RelaxationResult result;
  std::vector<bool> switched_on;  // one entry per capacitor, bus order
};

// Solves with every on/off pattern of the capacitors (at most 16) and keeps
// the best optimal one.
CapacitorChoice solve_capacitor_enumeration(const Network& net, Variant variant,
                                            ObjectiveKind objective, const SolveSettings& settings = {});

}  // namespace opfkit
