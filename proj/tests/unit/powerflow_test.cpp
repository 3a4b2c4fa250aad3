#include "opfkit/powerflow.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "opfkit/lindistflow.hpp"
#include "opfkit/scenarios.hpp"
#include "opfkit/socp.hpp"
#include "random_network.hpp"

namespace opfkit {
namespace {

Network two_bus() {
  NetworkData d;
  Bus b;
  b.id = 1;
  b.v_min = 0.5;
  b.v_max = 1.5;
  d.buses = {b};
  d.lines = {{0, 1, 0.1, 0.2}};
  return Network::assemble(d);
}

// s - diag(V) conj(Y V), with Y assembled as a dense bus admittance matrix.
std::vector<Complex> nodal_residual(const Network& net, const std::vector<Complex>& V, const BusVector& s) {
  const auto n = static_cast<Eigen::Index>(net.bus_count());
  Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(n, n);
  for (const Line& l : net.lines()) {
    const Complex y = 1.0 / l.z();
    const auto i = static_cast<Eigen::Index>(l.child), j = static_cast<Eigen::Index>(l.parent);
    Y(i, i) += y;
    Y(j, j) += y;
    Y(i, j) -= y;
    Y(j, i) -= y;
  }
  const Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXcd>(V.data(), n);
  const Eigen::VectorXcd I = Y * v;
  std::vector<Complex> out(s);
  for (Eigen::Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] -= v[i] * std::conj(I[i]);
  return out;
}

TEST(PowerFlow, TwoBusClosedForm) {
  const Network net = two_bus();
  const BusVector s{{0, 0}, {-0.5, -0.125}};
  const PowerFlowSolution pf = solve_power_flow(net, s);
  // v^2 - 0.85 v + 0.05 * 0.265625 = 0, larger root
  const double v1 = (0.85 + std::sqrt(0.85 * 0.85 - 4 * 0.05 * 0.265625)) / 2;
  EXPECT_NEAR(v1, 0.834077, 1e-6);
  EXPECT_NEAR(std::norm(pf.voltage[1]), v1, 1e-11);
  EXPECT_NEAR(std::abs(pf.voltage[1]), 0.913278, 1e-6);

  const BranchFlowPoint w = to_branch_flow(net, pf, s);
  EXPECT_NEAR(w.ell[0], 0.265625 / v1, 1e-11);
  EXPECT_NEAR(std::abs(w.S[0] - s[1]), 0.0, 1e-11);
  // s0 = -(S - z l)
  EXPECT_NEAR(std::abs(w.s[0] + (w.S[0] - net.line(0).z() * w.ell[0])), 0.0, 1e-11);

  std::vector<Complex> full = s;
  full[0] = pf.s0;
  for (const Complex& r : pf_residual(net, pf.voltage, full)) EXPECT_LE(std::abs(r), 1e-10);
  // angle from V1 = V0 + z I, I = conj(s1 / V1)
  const Complex V1 = 1.0 + net.line(0).z() * std::conj(s[1] / pf.voltage[1]);
  EXPECT_NEAR(std::arg(pf.voltage[1]), std::arg(V1), 1e-12);
}

TEST(PowerFlow, ZeroInjectionOneSweep) {
  const Network net = bundled_network("sce56");
  const BusVector s(net.bus_count(), Complex(0.0, 0.0));
  const PowerFlowSolution pf = solve_power_flow(net, s);
  EXPECT_EQ(pf.sweeps, 1);
  for (const Complex& v : pf.voltage) EXPECT_EQ(v, Complex(1.0, 0.0));
  const BranchFlowPoint w = to_branch_flow(net, pf, s);
  for (double l : w.ell) EXPECT_EQ(l, 0.0);
  for (const Complex& S : w.S) EXPECT_EQ(S, Complex(0.0, 0.0));
  for (const Complex& r : pf_residual(net, pf.voltage, s)) EXPECT_EQ(r, Complex(0.0, 0.0));
}

// Frozen from tests/oracles/oracle.py (Newton on the nodal equations).
TEST(PowerFlow, FeedersAtPeak) {
  {
    const Network net = bundled_network("sce47");
    const PowerFlowSolution pf = solve_power_flow(net, peak_operating_point(net));
    EXPECT_NEAR(pf.s0.real(), 4.691775825, 1e-8);
    EXPECT_NEAR(pf.s0.imag(), -1.783884771, 1e-8);
    double vmin = kInf;
    for (const Complex& v : pf.voltage) vmin = std::min(vmin, std::abs(v));
    EXPECT_NEAR(vmin, 0.9952514241, 1e-9);
  }
  {
    const Network net = bundled_network("sce56");
    const PowerFlowSolution pf = solve_power_flow(net, peak_operating_point(net));
    EXPECT_NEAR(pf.s0.real(), -1.15721375, 1e-8);
    EXPECT_NEAR(pf.s0.imag(), -1.217346779, 1e-8);
  }
}

TEST(PowerFlow, DivergenceThrows) {
  const Network net = two_bus();
  EXPECT_THROW(solve_power_flow(net, {{0, 0}, {-5.0, -5.0}}), PowerFlowError);
  EXPECT_THROW(solve_power_flow(net, {{0, 0}}), ModelError);
}

TEST(PowerFlowProperty, ResidualMatchesNodalFormula) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Network net = testing::random_tree(rng);
    std::vector<Complex> V(net.bus_count());
    BusVector s(net.bus_count());
    for (std::size_t i = 0; i < net.bus_count(); ++i) {
      V[i] = {1.0 + 0.1 * u(rng), 0.1 * u(rng)};
      s[i] = {u(rng), u(rng)};
    }
    const std::vector<Complex> a = pf_residual(net, V, s);
    const std::vector<Complex> b = nodal_residual(net, V, s);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(std::abs(a[i] - b[i]), 0.0, 1e-9);
  }
}

TEST(PowerFlowProperty, ConvergedSolvesAreExactBranchFlowPoints) {
  std::mt19937_64 rng(22);
  int converged = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const Network net = testing::random_tree(rng);
    const BusVector s = sample_injections(net, rng);
    PowerFlowSolution pf;
    try {
      pf = solve_power_flow(net, s);
    } catch (const PowerFlowError&) {
      continue;
    }
    ++converged;
    const BranchFlowPoint w = to_branch_flow(net, pf, s);
    for (double g : exactness_gap(net, w)) EXPECT_LE(std::abs(g), 1e-9);
    const FeasibilityReport f = check_feasibility(net, w);
    EXPECT_LE(f.voltage_drop, 1e-9);
    EXPECT_LE(f.power_balance, 1e-9);
    std::vector<Complex> full = s;
    full[0] = pf.s0;
    for (const Complex& r : pf_residual(net, pf.voltage, full)) EXPECT_LE(std::abs(r), 1e-9);
  }
  EXPECT_GT(converged, 250);
}

TEST(PowerFlowProperty, LinearModelBoundsPowerFlow) {
  std::mt19937_64 rng(23);
  testing::RandomTreeOptions opts;
  opts.gen_max = 0.2;
  opts.load_max = 0.2;
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const Network net = testing::random_tree(rng, opts);
    const BusVector s = sample_injections(net, rng);
    PowerFlowSolution pf;
    try {
      pf = solve_power_flow(net, s);
    } catch (const PowerFlowError&) {
      continue;
    }
    ++checked;
    const LinearBoundMargins m = check_linear_bounds(net, to_branch_flow(net, pf, s));
    EXPECT_GE(m.min_margin, -1e-9);
    for (double d : m.P) EXPECT_GE(d, -1e-9);
    for (double d : m.Q) EXPECT_GE(d, -1e-9);
    for (double d : m.v) EXPECT_GE(d, -1e-9);
  }
  EXPECT_GT(checked, 200);
}

}  // namespace
}  // namespace opfkit
