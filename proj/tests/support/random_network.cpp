#include "random_network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "opfkit/lindistflow.hpp"
#include "opfkit/scenarios.hpp"

namespace opfkit::testing {

Network random_tree(std::mt19937_64& rng, const RandomTreeOptions& opts) {
  std::uniform_int_distribution<int> size(opts.min_buses, opts.max_buses);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto between = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  NetworkData data;
  data.substation_id = 0;
  data.v0 = 1.0;
  const int n = size(rng);
  for (int i = 0; i < n; ++i) {
    Bus b;
    b.id = i;
    b.v_min = opts.v_lo * opts.v_lo;
    b.v_max = opts.v_hi * opts.v_hi;
    if (i == 0) {
      b.cost = LinearCost{1.0, 0.0};
    } else {
      const double load_p = between(0.0, opts.load_max);
      const double load_q = between(0.0, 0.5 * opts.load_max);
      const bool gen = unit(rng) < opts.gen_probability;
      const double gen_p = gen ? between(0.0, opts.gen_max) : 0.0;
      const double gen_q = gen ? between(0.0, 0.5 * opts.gen_max) : 0.0;
      BoxInjection box{-load_p, gen_p, -load_q, gen_q};
      if (opts.unbounded_below) box.p_lo = box.q_lo = -kInf;
      b.devices.push_back({box, DeviceRole::kGeneric});
      b.cost = LinearCost{between(0.1, 0.5), 0.0};
      std::uniform_int_distribution<int> parent(0, i - 1);
      const double r = between(opts.r_lo, opts.r_hi);
      data.lines.push_back({parent(rng), i, r, r / between(opts.rx_lo, opts.rx_hi)});
    }
    data.buses.push_back(b);
  }
  return Network::assemble(std::move(data));
}

bool voltages_within_bounds(const Network& net, const BranchFlowPoint& w, double tol) {
  for (std::size_t i = 1; i < net.bus_count(); ++i) {
    if (w.v[i] < net.bus(i).v_min - tol || w.v[i] > net.bus(i).v_max + tol) return false;
  }
  return true;
}

Network random_c1_tree(std::mt19937_64& rng, const RandomTreeOptions& opts, int max_tries) {
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    Network net = random_tree(rng, opts);
    if (!check_c1(net).holds) continue;
    BusVector s(net.bus_count(), Complex(0.0, 0.0));
    if (!opts.unbounded_below) s = sample_injections(net, rng);
    try {
      const BusVector sp = s;
      const PowerFlowSolution pf = solve_power_flow(net, sp);
      if (voltages_within_bounds(net, to_branch_flow(net, pf, sp))) return net;
    } catch (const PowerFlowError&) {
    }
  }
  throw std::runtime_error("no C1 tree found");
}

BranchFlowPoint slackened_point(const Network& net, const BusVector& s, std::size_t line, double extra) {
  const std::size_t n = net.bus_count();
  BranchFlowPoint w;
  w.s = s;
  w.v.assign(n, net.v0());
  w.S.assign(net.line_count(), Complex(0.0, 0.0));
  w.ell.assign(net.line_count(), 0.0);
  for (int sweep = 0; sweep < 500; ++sweep) {
    // Children always have larger indices than their parents.
    std::vector<Complex> inflow(n, Complex(0.0, 0.0));
    for (std::size_t i = n - 1; i >= 1; --i) {
      const std::size_t k = Network::line_of(i);
      const Line& l = net.line(k);
      w.S[k] = s[i] + inflow[i];
      w.ell[k] = std::norm(w.S[k]) / w.v[i] + (k == line ? extra : 0.0);
      inflow[l.parent] += w.S[k] - l.z() * w.ell[k];
    }
    w.s[0] = -inflow[0];
    double change = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
      const std::size_t k = Network::line_of(i);
      const Line& l = net.line(k);
      const double v = w.v[l.parent] + 2.0 * (l.r * w.S[k].real() + l.x * w.S[k].imag()) -
                       std::norm(l.z()) * w.ell[k];
      change = std::max(change, std::abs(v - w.v[i]));
      w.v[i] = v;
    }
    if (!std::isfinite(change) || *std::min_element(w.v.begin(), w.v.end()) <= 0.0) break;
    if (change < 1e-14) return w;
  }
  throw PowerFlowError("slackened point sweep did not converge");
}

}  // namespace opfkit::testing
