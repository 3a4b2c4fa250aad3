#include "opfkit/conic.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace opfkit {
namespace {

TEST(ConicBuilder, LayoutOrdersNonnegativeRowsBeforeCones) {
  ConicBuilder b;
  const int x = b.add_variable();
  const int y = b.add_variable();
  b.add_cost(x, 1.0);
  b.add_offset(2.0);
  b.add_equality({{x, 1.0}, {y, 1.0}}, 3.0);
  b.add_soc({{{{x, 1.0}}, 1.0}, {{{y, 2.0}}, 0.0}});
  b.add_less_equal({{y, 1.0}}, 5.0);
  const ConeProgram p = b.build();
  EXPECT_EQ(p.c.size(), 2);
  EXPECT_EQ(p.A.rows(), 1);
  EXPECT_EQ(p.b[0], 3.0);
  EXPECT_EQ(p.nonneg, 1);
  EXPECT_EQ(p.soc, std::vector<int>{2});
  ASSERT_EQ(p.G.rows(), 3);
  EXPECT_EQ(p.G.coeff(0, 1), 1.0);
  EXPECT_EQ(p.h[0], 5.0);
  // components c: h - G x = c.constant + c.terms x
  EXPECT_EQ(p.G.coeff(1, 0), -1.0);
  EXPECT_EQ(p.h[1], 1.0);
  EXPECT_EQ(p.G.coeff(2, 1), -2.0);
  EXPECT_EQ(p.offset, 2.0);
  EXPECT_EQ(b.equality_count(), 1);
}

TEST(Conic, LinearProgram) {
  // min x1 + x2, x1 + 2 x2 = 1, x >= 0  ->  x = (0, 0.5)
  ConicBuilder b;
  const int x1 = b.add_variable(), x2 = b.add_variable();
  b.add_cost(x1, 1.0);
  b.add_cost(x2, 1.0);
  b.add_equality({{x1, 1.0}, {x2, 2.0}}, 1.0);
  b.add_less_equal({{x1, -1.0}}, 0.0);
  b.add_less_equal({{x2, -1.0}}, 0.0);
  const ConicSolution s = solve_conic(b.build());
  ASSERT_EQ(s.status, ConicStatus::kOptimal);
  EXPECT_NEAR(s.primal_objective, 0.5, 1e-7);
  EXPECT_NEAR(s.dual_objective, 0.5, 1e-7);
  EXPECT_NEAR(s.x[x1], 0.0, 1e-7);
  EXPECT_NEAR(s.x[x2], 0.5, 1e-7);
}

TEST(Conic, SecondOrderCone) {
  // min -x1 s.t. |(x1, x2)| <= 1  ->  -1
  ConicBuilder b;
  const int x1 = b.add_variable(), x2 = b.add_variable();
  b.add_cost(x1, -1.0);
  b.add_soc({{{}, 1.0}, {{{x1, 1.0}}, 0.0}, {{{x2, 1.0}}, 0.0}});
  const ConicSolution s = solve_conic(b.build());
  ASSERT_EQ(s.status, ConicStatus::kOptimal);
  EXPECT_NEAR(s.primal_objective, -1.0, 1e-7);
  EXPECT_NEAR(s.x[x1], 1.0, 1e-6);
  EXPECT_NEAR(s.x[x2], 0.0, 1e-6);
}

TEST(Conic, RotatedConeEpigraph) {
  // min u s.t. u >= x^2, x = 2  ->  4, via (u + 1, u - 1, 2x) in Q^3
  ConicBuilder b;
  const int u = b.add_variable(), x = b.add_variable();
  b.add_cost(u, 1.0);
  b.add_equality({{x, 1.0}}, 2.0);
  b.add_soc({{{{u, 1.0}}, 1.0}, {{{u, 1.0}}, -1.0}, {{{x, 2.0}}, 0.0}});
  const ConicSolution s = solve_conic(b.build());
  ASSERT_EQ(s.status, ConicStatus::kOptimal);
  EXPECT_NEAR(s.primal_objective, 4.0, 1e-7);
}

TEST(Conic, OffsetIsReported) {
  ConicBuilder b;
  const int x = b.add_variable();
  b.add_cost(x, 1.0);
  b.add_offset(10.0);
  b.add_less_equal({{x, -1.0}}, -1.0);
  const ConicSolution s = solve_conic(b.build());
  ASSERT_EQ(s.status, ConicStatus::kOptimal);
  EXPECT_NEAR(s.primal_objective, 11.0, 1e-7);
}

TEST(Conic, DetectsInfeasibility) {
  // x >= 1 and x <= 0
  ConicBuilder b;
  const int x = b.add_variable();
  b.add_cost(x, 1.0);
  b.add_less_equal({{x, -1.0}}, -1.0);
  b.add_less_equal({{x, 1.0}}, 0.0);
  EXPECT_EQ(solve_conic(b.build()).status, ConicStatus::kPrimalInfeasible);

  // |(x, 1)| <= 0.5
  ConicBuilder c;
  const int y = c.add_variable();
  c.add_cost(y, 1.0);
  c.add_soc({{{}, 0.5}, {{{y, 1.0}}, 0.0}, {{}, 1.0}});
  EXPECT_EQ(solve_conic(c.build()).status, ConicStatus::kPrimalInfeasible);
}

TEST(Conic, DetectsUnboundedness) {
  // min -x s.t. x >= 0
  ConicBuilder b;
  const int x = b.add_variable();
  b.add_cost(x, -1.0);
  b.add_less_equal({{x, -1.0}}, 0.0);
  EXPECT_EQ(solve_conic(b.build()).status, ConicStatus::kDualInfeasible);
}

TEST(Conic, IterationLimit) {
  ConicBuilder b;
  const int x1 = b.add_variable(), x2 = b.add_variable();
  b.add_cost(x1, -1.0);
  b.add_soc({{{}, 1.0}, {{{x1, 1.0}}, 0.0}, {{{x2, 1.0}}, 0.0}});
  ConicSettings settings;
  settings.max_iter = 1;
  EXPECT_EQ(solve_conic(b.build(), settings).status, ConicStatus::kMaxIterations);
}

TEST(Conic, StatusNames) {
  EXPECT_STREQ(status_name(ConicStatus::kOptimal), "optimal");
  EXPECT_STREQ(status_name(ConicStatus::kPrimalInfeasible), "infeasible");
  EXPECT_STREQ(status_name(ConicStatus::kDualInfeasible), "unbounded");
  EXPECT_STREQ(status_name(ConicStatus::kMaxIterations), "max_iter");
  EXPECT_STREQ(status_name(ConicStatus::kNumericalError), "numerical_error");
}

// Random programs built around a strictly feasible primal-dual pair, so an
// optimum exists. Checks KKT conditions of the returned point directly.
TEST(ConicProperty, RandomFeasiblePrograms) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> gauss;
  std::uniform_int_distribution<int> dim(1, 6);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = dim(rng) + 2;
    const int p = std::uniform_int_distribution<int>(0, n - 1)(rng);
    const int l = dim(rng);
    std::vector<int> soc{dim(rng) + 1, dim(rng) + 1};
    const int m = l + soc[0] + soc[1];

    Eigen::MatrixXd A = Eigen::MatrixXd::NullaryExpr(p, n, [&] { return gauss(rng); });
    Eigen::MatrixXd G = Eigen::MatrixXd::NullaryExpr(m, n, [&] { return gauss(rng); });
    Eigen::VectorXd x0 = Eigen::VectorXd::NullaryExpr(n, [&] { return gauss(rng); });
    const auto interior = [&](Eigen::VectorXd& v) {
      for (int i = 0; i < l; ++i) v[i] = std::abs(gauss(rng)) + 0.1;
      int off = l;
      for (int q : soc) {
        double t = 0.0;
        for (int i = 1; i < q; ++i) {
          v[off + i] = gauss(rng);
          t += v[off + i] * v[off + i];
        }
        v[off] = std::sqrt(t) + 0.1 + std::abs(gauss(rng));
        off += q;
      }
    };
    Eigen::VectorXd s0(m), z0(m);
    interior(s0);
    interior(z0);
    Eigen::VectorXd y0 = Eigen::VectorXd::NullaryExpr(p, [&] { return gauss(rng); });

    ConeProgram prog;
    prog.A = A.sparseView();
    prog.b = A * x0;
    prog.G = G.sparseView();
    prog.h = G * x0 + s0;
    prog.c = -A.transpose() * y0 - G.transpose() * z0;
    prog.nonneg = l;
    prog.soc = soc;

    const ConicSolution sol = solve_conic(prog);
    ASSERT_EQ(sol.status, ConicStatus::kOptimal) << "trial " << trial;
    const double scale = 1.0 + prog.h.lpNorm<Eigen::Infinity>() + prog.c.lpNorm<Eigen::Infinity>();
    EXPECT_LE((A * sol.x - prog.b).lpNorm<Eigen::Infinity>(), 1e-6 * scale);
    EXPECT_LE((G * sol.x + sol.s - prog.h).lpNorm<Eigen::Infinity>(), 1e-6 * scale);
    EXPECT_LE((prog.c + A.transpose() * sol.y + G.transpose() * sol.z).lpNorm<Eigen::Infinity>(), 1e-6 * scale);
    EXPECT_NEAR(sol.primal_objective, sol.dual_objective, 1e-6 * (1.0 + std::abs(sol.primal_objective)));
    // cone membership of s and z
    for (int i = 0; i < l; ++i) {
      EXPECT_GE(sol.s[i], -1e-9);
      EXPECT_GE(sol.z[i], -1e-9);
    }
    int off = l;
    for (int q : soc) {
      EXPECT_GE(sol.s[off] - sol.s.segment(off + 1, q - 1).norm(), -1e-9);
      EXPECT_GE(sol.z[off] - sol.z.segment(off + 1, q - 1).norm(), -1e-9);
      off += q;
    }
    // the objective at x0 bounds the optimum from above
    EXPECT_LE(sol.primal_objective, prog.c.dot(x0) + 1e-6 * scale);
  }
}

TEST(ConicProperty, PerturbedStartReachesSameOptimum) {
  ConicBuilder b;
  const int x1 = b.add_variable(), x2 = b.add_variable(), x3 = b.add_variable();
  b.add_cost(x1, 1.0);
  b.add_cost(x2, 2.0);
  b.add_cost(x3, 0.5);
  b.add_equality({{x1, 1.0}, {x2, 1.0}, {x3, 1.0}}, 3.0);
  b.add_soc({{{{x3, 1.0}}, 0.0}, {{{x1, 1.0}}, -1.0}, {{{x2, 1.0}}, 0.0}});
  b.add_less_equal({{x3, 1.0}}, 2.0);
  const ConeProgram prog = b.build();
  const ConicSolution a = solve_conic(prog);
  ConicSettings settings;
  settings.perturbation_seed = 99;
  const ConicSolution c = solve_conic(prog, settings);
  ASSERT_EQ(a.status, ConicStatus::kOptimal);
  ASSERT_EQ(c.status, ConicStatus::kOptimal);
  EXPECT_NEAR(a.primal_objective, c.primal_objective, 1e-7);
  EXPECT_LE((a.x - c.x).lpNorm<Eigen::Infinity>(), 1e-5);
}

TEST(ConicPolish, SharpensDegenerateOptimum) {
  // min t s.t. (x - 1)^2 + y^2 <= (t + 1) / 2 and x <= 1. Optimum t = -1 at
  // x = 1, y = 0, where x <= 1 is active with a zero multiplier.
  ConicBuilder b;
  const int t = b.add_variable(), x = b.add_variable(), y = b.add_variable();
  b.add_cost(t, 1.0);
  b.add_less_equal({{x, 1.0}}, 1.0);
  // (u + w, u - w, 2(x - 1), 2y) with u = t + 1, w = 1/2
  b.add_soc({{{{t, 1.0}}, 1.5}, {{{t, 1.0}}, 0.5}, {{{x, 2.0}}, -2.0}, {{{y, 2.0}}, 0.0}});
  const ConeProgram prog = b.build();
  ConicSettings plain;
  plain.polish = false;
  const ConicSolution a = solve_conic(prog, plain);
  const ConicSolution c = solve_conic(prog);
  ASSERT_EQ(a.status, ConicStatus::kOptimal);
  ASSERT_EQ(c.status, ConicStatus::kOptimal);
  EXPECT_FALSE(a.polished);
  EXPECT_TRUE(c.polished);
  EXPECT_NEAR(c.x[x], 1.0, 1e-12);
  EXPECT_NEAR(c.x[y], 0.0, 1e-12);
  EXPECT_NEAR(c.primal_objective, -1.0, 1e-12);
  EXPECT_LE(std::abs(c.x[x] - 1.0), std::abs(a.x[x] - 1.0) + 1e-15);
}

TEST(ConicPolish, KeepsLinearProgramOptimum) {
  ConicBuilder b;
  const int x1 = b.add_variable(), x2 = b.add_variable();
  b.add_cost(x1, 1.0);
  b.add_cost(x2, 1.0);
  b.add_equality({{x1, 1.0}, {x2, 2.0}}, 1.0);
  b.add_less_equal({{x1, -1.0}}, 0.0);
  b.add_less_equal({{x2, -1.0}}, 0.0);
  const ConicSolution s = solve_conic(b.build());
  ASSERT_EQ(s.status, ConicStatus::kOptimal);
  EXPECT_TRUE(s.polished);
  EXPECT_NEAR(s.x[x1], 0.0, 1e-13);
  EXPECT_NEAR(s.x[x2], 0.5, 1e-13);
  EXPECT_NEAR(s.z[0], 0.5, 1e-9);
  EXPECT_NEAR(s.z[1], 0.0, 1e-9);
}

}  // namespace
}  // namespace opfkit
