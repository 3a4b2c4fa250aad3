#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "opfkit/network.hpp"
#include "opfkit/powerflow.hpp"
#include "opfkit/socp.hpp"

namespace opfkit {

// Line with strict cone slack whose path from its parent to the substation is
// exact. Smallest depth wins, then smallest child id.
std::optional<std::size_t> find_violating_line(const Network& net, const BranchFlowPoint& w,
                                               double tol = 1e-6);

// l_m - |S_m|^2 / v_m.
double cone_slack(const Network& net, const BranchFlowPoint& w, std::size_t line);

// Moves `step` of current off line m and propagates the flow change to the
// substation. Injections are kept; v is rebuilt from the root.
BranchFlowPoint construct_improved_point(const Network& net, const BranchFlowPoint& w, std::size_t line,
                                         double step, double tol = 1e-6);

struct ImprovementAudit {
  FeasibilityReport feasibility;
  bool injections_unchanged = false;
  double worst_violation = 0.0;
  // Movement past voltage bounds already active at the original point
  // (within feasibility_tol); must not exceed 1e-12.
  double active_bound_push = 0.0;
  bool feasible = false;        // worst violation <= feasibility_tol, no active push
  double objective_before = 0.0;
  double objective_after = 0.0;
  double delta = 0.0;
  bool improved = false;        // delta < -1e-10
  bool accepted() const { return feasible && improved && injections_unchanged; }
};

ImprovementAudit audit_improvement(const Network& net, const BranchFlowPoint& before,
                                   const BranchFlowPoint& after, Variant variant, ObjectiveKind objective,
                                   double feasibility_tol = 1e-8);

struct Improvement {
  std::size_t line = 0;
  double step = 0.0;
  int halvings = 0;
  BranchFlowPoint point;
  ImprovementAudit audit;
};

// Full slack first, then halved until the audit accepts (at most 60 halvings).
// Empty when the point is exact. When no step is accepted the full-slack
// attempt is returned with halvings = 60; check audit.accepted().
std::optional<Improvement> improve_point(const Network& net, const BranchFlowPoint& w, Variant variant,
                                         ObjectiveKind objective, double tol = 1e-6);

struct KeyStepMatrix {
  double c = 1.0, d = 0.0, e = 0.0, f = 1.0;
};

// Per line, evaluated at w.
std::vector<KeyStepMatrix> key_step_matrices(const Network& net, const BranchFlowPoint& w);

struct KeyStepVerdict {
  std::size_t bus = 0;
  int depth = 0;  // t, 1 <= t <= depth(bus)
  Eigen::Vector2d value;
  bool positive = false;
};

struct KeyStepReport {
  bool holds = true;
  std::vector<KeyStepMatrix> matrices;
  std::vector<KeyStepVerdict> checks;
};

KeyStepReport key_step_check(const Network& net, const BranchFlowPoint& w);

struct MatrixLemmaResult {
  bool hypothesis = false;
  bool conclusion = false;
};

// Throws std::invalid_argument unless 0 < c <= 1, d >= 0, e >= 0, 0 < f <= 1
// and u > 0.
MatrixLemmaResult check_matrix_lemma(const std::vector<double>& c, const std::vector<double>& d,
                                     const std::vector<double>& e, const std::vector<double>& f,
                                     const Eigen::Vector2d& u);

// Two buses, z = 0.1 + 0.2i, v1 in [0.9, 1.1], 0 <= p1 <= 1, q1 = 0;
// objective is loss plus curtailment.
std::pair<Network, ObjectiveKind> two_bus_counterexample();

}  // namespace opfkit
