#include "opfkit/socp.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <random>

#include "opfkit/certificate.hpp"
#include "opfkit/lindistflow.hpp"
#include "opfkit/scenarios.hpp"
#include "random_network.hpp"

namespace opfkit {
namespace {

TEST(Socp, Names) {
  EXPECT_EQ(parse_variant(variant_name(Variant::kSocp)), Variant::kSocp);
  EXPECT_EQ(parse_variant(variant_name(Variant::kSocpM)), Variant::kSocpM);
  EXPECT_EQ(parse_objective(objective_name(ObjectiveKind::kLoss)), ObjectiveKind::kLoss);
  EXPECT_EQ(parse_objective(objective_name(ObjectiveKind::kSumCost)), ObjectiveKind::kSumCost);
  EXPECT_FALSE(parse_variant("sdp"));
  EXPECT_FALSE(parse_objective("cost"));
}

TEST(Socp, LayoutHasOneVariablePerQuantity) {
  const Network net = bundled_network("sce56");
  const Relaxation rel = build_relaxation(net, Variant::kSocpM, ObjectiveKind::kLoss);
  EXPECT_EQ(rel.layout.P.size(), net.line_count());
  EXPECT_EQ(rel.layout.v.size(), net.bus_count());
  EXPECT_EQ(rel.layout.v[0], -1);
  EXPECT_GE(rel.layout.p0, 0);
  EXPECT_EQ(rel.program.soc.size(), net.line_count());
  // (l + v, l - v, 2P, 2Q)
  for (int q : rel.program.soc) EXPECT_EQ(q, 4);
  const Relaxation plain = build_relaxation(net, Variant::kSocp, ObjectiveKind::kLoss);
  EXPECT_EQ(rel.program.nonneg, plain.program.nonneg);
}

TEST(Socp, CounterexampleIsNotExact) {
  const auto [net, objective] = two_bus_counterexample();
  const RelaxationResult r = solve_relaxation(net, Variant::kSocp, objective);
  ASSERT_EQ(r.status, ConicStatus::kOptimal);
  EXPECT_NEAR(r.point.v[1], 1.1, 1e-3);
  EXPECT_NEAR(exactness_gap(net, r.point)[0], 1.2, 0.02);
  EXPECT_NEAR(r.objective, 0.2, 1e-3);
  EXPECT_NEAR(r.point.s[1].real(), 1.0, 1e-6);
  EXPECT_NEAR(r.point.s[0].real(), -0.8, 1e-6);
  EXPECT_FALSE(r.exact);
  EXPECT_THROW(recover_voltages(net, r.point), ModelError);
  const FeasibilityReport f = check_feasibility(net, r.point);
  EXPECT_LE(f.worst(Variant::kSocp), 1e-7);
  EXPECT_NEAR(f.linear_upper, 0.1, 1e-6);
  EXPECT_GT(f.worst(Variant::kSocpM), 0.09);
}

TEST(Socp, ModifiedCounterexampleIsExact) {
  const auto [net, objective] = two_bus_counterexample();
  const RelaxationResult r = solve_relaxation(net, Variant::kSocpM, objective);
  ASSERT_EQ(r.status, ConicStatus::kOptimal);
  EXPECT_NEAR(r.point.s[1].real(), 0.5, 1e-4);
  EXPECT_TRUE(r.exact);
  EXPECT_LE(r.max_gap, 1e-6);
  EXPECT_NEAR(r.objective, 0.5229670386, 1e-7);
  const PowerFlowSolution pf = recover_voltages(net, r.point);
  for (const Complex& e : pf_residual(net, pf.voltage, r.point.s)) EXPECT_LE(std::abs(e), 1e-6);
}

// Frozen from tests/oracles/oracle.py (cvxpy + Clarabel).
TEST(Socp, FeederObjectives) {
  struct Case {
    const char* net;
    ObjectiveKind objective;
    double value;
  };
  const Case cases[] = {
      {"sce47", ObjectiveKind::kLoss, 0.1168483191},
      {"sce47", ObjectiveKind::kSumCost, 4.677848319},
      {"sce56", ObjectiveKind::kLoss, 0.02611000192},
      {"sce56", ObjectiveKind::kSumCost, -1.172813033},
  };
  for (const Case& c : cases) {
    SCOPED_TRACE(std::string(c.net) + " " + objective_name(c.objective));
    const Network net = bundled_network(c.net);
    const RelaxationResult r = solve_relaxation(net, Variant::kSocpM, c.objective);
    ASSERT_EQ(r.status, ConicStatus::kOptimal);
    EXPECT_NEAR(r.objective, c.value, 1e-7 * (1.0 + std::abs(c.value)));
    EXPECT_TRUE(r.exact);
    EXPECT_TRUE(r.relaxed_discrete || c.net == std::string("sce56"));
    EXPECT_NEAR(objective_value(net, r.point, c.objective), r.objective, 1e-7);
  }
}

TEST(Socp, RelativeGapDefinition) {
  const auto [net, objective] = two_bus_counterexample();
  BranchFlowPoint w;
  w.s = {{-0.5, 0}, {0.5, 0}};
  w.S = {{0.5, 0.0}};
  w.ell = {1.0};
  w.v = {1.0, 1.0};
  EXPECT_DOUBLE_EQ(exactness_gap(net, w)[0], 0.75);
  EXPECT_DOUBLE_EQ(relative_gap(net, w)[0], 0.75 / 2.0);
  EXPECT_FALSE(is_exact(net, w));
  w.ell = {0.25};
  EXPECT_TRUE(is_exact(net, w));
}

TEST(Socp, CapacitorEnumerationBoundsRelaxation) {
  const Network net = bundled_network("sce47");
  const RelaxationResult relaxed = solve_relaxation(net, Variant::kSocpM, ObjectiveKind::kLoss);
  const CapacitorChoice best = solve_capacitor_enumeration(net, Variant::kSocpM, ObjectiveKind::kLoss);
  ASSERT_EQ(best.result.status, ConicStatus::kOptimal);
  EXPECT_FALSE(best.switched_on.empty());
  EXPECT_FALSE(best.result.relaxed_discrete);
  EXPECT_GE(best.result.objective, relaxed.objective - 1e-7);
}

// Random C1 trees with a feasible power flow: every SOCP-m solve is exact and
// the recovered voltages solve the power flow equations.
TEST(SocpProperty, ModifiedRelaxationExactUnderC1) {
  std::mt19937_64 rng(101);
  const auto t0 = std::chrono::steady_clock::now();
  for (int trial = 0; trial < 200; ++trial) {
    const Network net = testing::random_c1_tree(rng);
    const RelaxationResult r = solve_relaxation(net, Variant::kSocpM, ObjectiveKind::kSumCost);
    ASSERT_EQ(r.status, ConicStatus::kOptimal) << "trial " << trial;
    EXPECT_LE(r.max_gap, 1e-6) << "trial " << trial;
    const PowerFlowSolution pf = recover_voltages(net, r.point);
    for (const Complex& e : pf_residual(net, pf.voltage, r.point.s)) EXPECT_LE(std::abs(e), 1e-6);
    EXPECT_GE(check_linear_bounds(net, r.point).min_margin, -1e-9);
  }
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 60.0);
}

TEST(SocpProperty, LinearModelBoundsSolverPoints) {
  std::mt19937_64 rng(102);
  for (int trial = 0; trial < 100; ++trial) {
    const Network net = testing::random_tree(rng);
    for (Variant variant : {Variant::kSocp, Variant::kSocpM}) {
      const RelaxationResult r = solve_relaxation(net, variant, ObjectiveKind::kLoss);
      if (r.status != ConicStatus::kOptimal) continue;
      const LinearBoundMargins m = check_linear_bounds(net, r.point);
      EXPECT_GE(m.min_margin, -1e-9) << "trial " << trial;
    }
  }
}

TEST(SocpProperty, PerturbedSolvesAgree) {
  std::mt19937_64 rng(103);
  int compared = 0;
  while (compared < 20) {
    const Network net = testing::random_c1_tree(rng);
    const RelaxationResult a = solve_relaxation(net, Variant::kSocpM, ObjectiveKind::kSumCost);
    if (!a.exact) continue;
    SolveSettings settings;
    settings.conic.perturbation_seed = 1000 + static_cast<std::uint64_t>(compared);
    settings.conic.step_fraction = 0.95;
    const RelaxationResult b = solve_relaxation(net, Variant::kSocpM, ObjectiveKind::kSumCost, settings);
    ASSERT_EQ(b.status, ConicStatus::kOptimal);
    EXPECT_LE((a.raw.x - b.raw.x).lpNorm<Eigen::Infinity>(), 1e-5) << "instance " << compared;
    ++compared;
  }
}

TEST(SocpProperty, NoLowerInjectionBoundsMakesRelaxationExact) {
  std::mt19937_64 rng(104);
  testing::RandomTreeOptions opts;
  opts.unbounded_below = true;
  opts.max_buses = 12;
  for (int trial = 0; trial < 50; ++trial) {
    const Network net = testing::random_tree(rng, opts);
    ASSERT_TRUE(check_sufficient_conditions(net).load_over_satisfaction);
    const RelaxationResult r = solve_relaxation(net, Variant::kSocp, ObjectiveKind::kSumCost);
    ASSERT_EQ(r.status, ConicStatus::kOptimal) << "trial " << trial;
    EXPECT_LE(r.max_gap, 1e-6) << "trial " << trial;
  }
}

}  // namespace
}  // namespace opfkit
