#include "opfkit/lindistflow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "opfkit/scenarios.hpp"

namespace opfkit {

namespace {

std::vector<double> subtree_sum(const Network& net, const std::vector<double>& x) {
  std::vector<double> acc(x);
  std::vector<double> out(net.line_count(), 0.0);
  for (std::size_t i = net.bus_count(); i-- > 1;) {
    out[Network::line_of(i)] = acc[i];
    acc[net.parent(i)] += acc[i];
  }
  return out;
}

double positive(double x) { return x > 0.0 ? x : 0.0; }

bool strictly_positive(double margin, double scale_a, double scale_b) {
  return margin > 1e-12 * std::max(std::abs(scale_a), std::abs(scale_b));
}

double wrap_angle(double a) {
  constexpr double pi = std::numbers::pi;
  a = std::fmod(a, 2.0 * pi);
  if (a <= -pi) a += 2.0 * pi;
  if (a > pi) a -= 2.0 * pi;
  return a;
}

}  // namespace

std::vector<Complex> subtree_injection(const Network& net, const BusVector& s) {
  check_bus_vector(net, s, "subtree_injection");
  std::vector<Complex> acc(s);
  std::vector<Complex> out(net.line_count());
  for (std::size_t i = net.bus_count(); i-- > 1;) {
    out[Network::line_of(i)] = acc[i];
    acc[net.parent(i)] += acc[i];
  }
  return out;
}

std::vector<double> linear_voltage(const Network& net, const BusVector& s) {
  const std::vector<Complex> S = subtree_injection(net, s);
  std::vector<double> w(net.bus_count(), net.v0());
  for (std::size_t i = 1; i < net.bus_count(); ++i) {
    const Line& l = net.line(Network::line_of(i));
    const Complex flow = S[Network::line_of(i)];
    w[i] = w[l.parent] + 2.0 * (l.r * flow.real() + l.x * flow.imag());
  }
  return w;
}

double ACoefficients::b_lo(std::size_t bus) const {
  if (!(a1[bus] > 0.0)) return kInf;
  return a2[bus] / a1[bus];
}

double ACoefficients::b_hi(std::size_t bus) const {
  if (a3[bus] == 0.0) return kInf;
  return a4[bus] / a3[bus];
}

ACoefficients a_coefficients(const Network& net, const std::vector<double>& p_bar,
                             const std::vector<double>& q_bar) {
  if (p_bar.size() != net.bus_count() || q_bar.size() != net.bus_count()) {
    throw ModelError("a_coefficients: bound vectors must be bus-indexed");
  }
  for (std::size_t i = 1; i < net.bus_count(); ++i) {
    if (!std::isfinite(p_bar[i]) || !std::isfinite(q_bar[i])) {
      throw NotCheckableError("bus " + std::to_string(net.bus(i).id) +
                              " has an infinite upper injection bound");
    }
  }
  std::vector<double> p(p_bar), q(q_bar);
  p[0] = q[0] = 0.0;
  const std::vector<double> P = subtree_sum(net, p);
  const std::vector<double> Q = subtree_sum(net, q);
  const std::size_t nb = net.bus_count();
  ACoefficients a{std::vector<double>(nb, 1.0), std::vector<double>(nb, 0.0),
                  std::vector<double>(nb, 0.0), std::vector<double>(nb, 1.0)};
  for (std::size_t i = 1; i < nb; ++i) {
    const std::size_t k = Network::line_of(i);
    const Line& l = net.line(k);
    const std::size_t j = l.parent;
    const double vmin = net.bus(i).v_min;
    const double pp = positive(P[k]);
    const double qp = positive(Q[k]);
    a.a1[i] = a.a1[j] * (1.0 - 2.0 * l.r * pp / vmin);
    a.a2[i] = a.a2[j] + 2.0 * l.r * qp / vmin;
    a.a3[i] = a.a3[j] + 2.0 * l.x * pp / vmin;
    a.a4[i] = a.a4[j] * (1.0 - 2.0 * l.x * qp / vmin);
  }
  return a;
}

ACoefficients a_coefficients(const Network& net) {
  std::vector<double> p(net.bus_count(), 0.0), q(net.bus_count(), 0.0);
  for (std::size_t i = 1; i < net.bus_count(); ++i) {
    const InjectionBox b = net.bus_box(i);
    p[i] = b.p_hi;
    q[i] = b.q_hi;
  }
  return a_coefficients(net, p, q);
}

Interval rx_range(const Network& net) {
  Interval out{kInf, -kInf};
  for (const Line& l : net.lines()) {
    const double rx = l.x > 0.0 ? l.r / l.x : kInf;
    out.lo = std::min(out.lo, rx);
    out.hi = std::max(out.hi, rx);
  }
  return out;
}

ConditionReport check_c1(const Network& net) {
  ConditionReport rep;
  rep.a = a_coefficients(net);
  const ACoefficients& a = rep.a;
  rep.holds = true;
  for (std::size_t k = 0; k < net.line_count(); ++k) {
    const Line& l = net.line(k);
    const std::size_t j = l.parent;
    LineCondition c;
    c.line = k;
    c.rx = l.x > 0.0 ? l.r / l.x : kInf;
    c.margin_r = a.a1[j] * l.r - a.a2[j] * l.x;
    c.margin_x = a.a4[j] * l.x - a.a3[j] * l.r;
    c.holds = strictly_positive(c.margin_r, a.a1[j] * l.r, a.a2[j] * l.x) &&
              strictly_positive(c.margin_x, a.a4[j] * l.x, a.a3[j] * l.r);
    rep.holds = rep.holds && c.holds;
    rep.lines.push_back(c);
  }
  rep.rx = rx_range(net);
  rep.min_interval = {-kInf, kInf};
  for (std::size_t i = 0; i < net.bus_count(); ++i) {
    if (a.b_lo(i) > rep.min_interval.lo) {
      rep.min_interval.lo = a.b_lo(i);
      rep.lo_bus = i;
    }
    if (a.b_hi(i) < rep.min_interval.hi) {
      rep.min_interval.hi = a.b_hi(i);
      rep.hi_bus = i;
    }
  }
  rep.interval_covers = rep.rx.lo > rep.min_interval.lo && rep.rx.hi < rep.min_interval.hi;
  return rep;
}

std::vector<WellConstrainedLine> check_well_constrained(const Network& net) {
  constexpr double pi = std::numbers::pi;
  std::vector<WellConstrainedLine> out;
  for (std::size_t k = 0; k < net.line_count(); ++k) {
    const Line& l = net.line(k);
    const double theta = std::atan2(l.x, l.r);
    WellConstrainedLine w;
    w.line = k;
    const auto add = [&](double bound, double angle) {
      if (std::isfinite(bound)) w.angles.push_back(wrap_angle(angle));
    };
    const InjectionBox bi = net.bus_box(l.child);
    add(bi.p_hi, -theta);
    add(bi.q_hi, -theta + pi / 2);
    add(bi.p_lo, -theta + pi);
    add(bi.q_lo, -theta - pi / 2);
    if (l.parent != 0) {
      const InjectionBox bj = net.bus_box(l.parent);
      add(bj.p_hi, theta);
      add(bj.q_hi, theta - pi / 2);
      add(bj.p_lo, theta - pi);
      add(bj.q_lo, theta + pi / 2);
    }
    double lo = -pi + 1e-9;
    double hi = -1e-9;
    for (double d : w.angles) {
      if (d >= 0.0) {
        lo = std::max(lo, d - pi);
      } else {
        hi = std::min(hi, d);
      }
    }
    w.well_constrained = lo <= hi;
    w.alpha = w.well_constrained ? std::clamp(-pi / 2, lo, hi) : 0.0;
    out.push_back(std::move(w));
  }
  return out;
}

SufficientConditions check_sufficient_conditions(const Network& net) {
  std::vector<double> p(net.bus_count(), 0.0), q(net.bus_count(), 0.0);
  bool unbounded_below = net.bus_count() > 1;
  for (std::size_t i = 1; i < net.bus_count(); ++i) {
    const InjectionBox b = net.bus_box(i);
    p[i] = b.p_hi;
    q[i] = b.q_hi;
    unbounded_below = unbounded_below && b.p_lo == -kInf && b.q_lo == -kInf;
  }
  const std::vector<double> P = subtree_sum(net, p);
  const std::vector<double> Q = subtree_sum(net, q);

  bool p_nonpos = true, q_nonpos = true, v_both = true, v_q = true, v_p = true;
  for (std::size_t k = 0; k < net.line_count(); ++k) {
    const Line& l = net.line(k);
    const double vmin = net.bus(l.child).v_min;
    p_nonpos = p_nonpos && P[k] <= 0.0;
    q_nonpos = q_nonpos && Q[k] <= 0.0;
    v_both = v_both && vmin - 2.0 * l.r * positive(P[k]) - 2.0 * l.x * positive(Q[k]) > 0.0;
    v_q = v_q && vmin - 2.0 * l.x * positive(Q[k]) > 0.0;
    v_p = v_p && vmin - 2.0 * l.r * positive(P[k]) > 0.0;
  }

  // Compare r/x of each line (downstream) with the line above it.
  bool equal = true, rising = true, falling = true;
  for (std::size_t k = 0; k < net.line_count(); ++k) {
    const Line& down = net.line(k);
    if (down.parent == 0) continue;
    const Line& up = net.line(Network::line_of(down.parent));
    const double lhs = down.r * up.x;
    const double rhs = up.r * down.x;
    const double tol = 1e-12 * std::max(std::abs(lhs), std::abs(rhs));
    equal = equal && std::abs(lhs - rhs) <= tol;
    rising = rising && lhs >= rhs - tol;
    falling = falling && lhs <= rhs + tol;
  }

  SufficientConditions c;
  c.no_reverse_flow = p_nonpos && q_nonpos;
  c.uniform_ratio = equal && v_both;
  c.ratio_rising_p = rising && p_nonpos && v_q;
  c.ratio_falling_q = falling && q_nonpos && v_p;
  c.load_over_satisfaction = unbounded_below;
  return c;
}

EpsilonResult epsilon_metric(const Network& net, const BusVector& s) {
  const PowerFlowSolution pf = solve_power_flow(net, s);
  const std::vector<double> w = linear_voltage(net, s);
  EpsilonResult r;
  r.per_bus.resize(net.bus_count(), 0.0);
  for (std::size_t i = 1; i < net.bus_count(); ++i) {
    r.per_bus[i] = w[i] - std::norm(pf.voltage[i]);
    if (r.per_bus[i] > r.epsilon) {
      r.epsilon = r.per_bus[i];
      r.bus = i;
    }
  }
  return r;
}

EpsilonResult epsilon_sampled(const Network& net, std::size_t samples, std::uint64_t seed) {
  if (samples == 0) throw ModelError("epsilon_sampled: need at least one sample");
  std::mt19937_64 rng(seed);
  EpsilonResult best;
  best.per_bus.assign(net.bus_count(), 0.0);
  best.samples = 0;
  for (std::size_t k = 0; k < samples; ++k) {
    const BusVector s = sample_injections(net, rng);
    EpsilonResult r;
    try {
      r = epsilon_metric(net, s);
    } catch (const PowerFlowError&) {
      continue;
    }
    ++best.samples;
    if (r.epsilon > best.epsilon) {
      best.epsilon = r.epsilon;
      best.bus = r.bus;
      best.per_bus = std::move(r.per_bus);
    }
  }
  if (best.samples == 0) throw PowerFlowError("no sampled operating point admits a power flow");
  return best;
}

}  // namespace opfkit
