#include "opfkit/socp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "opfkit/lindistflow.hpp"

namespace opfkit {

const char* variant_name(Variant v) { return v == Variant::kSocp ? "socp" : "socp-m"; }

const char* objective_name(ObjectiveKind o) { return o == ObjectiveKind::kLoss ? "loss" : "sum-cost"; }

std::optional<Variant> parse_variant(std::string_view s) {
  if (s == "socp") return Variant::kSocp;
  if (s == "socp-m" || s == "socp_m") return Variant::kSocpM;
  return std::nullopt;
}

std::optional<ObjectiveKind> parse_objective(std::string_view s) {
  if (s == "loss") return ObjectiveKind::kLoss;
  if (s == "sum-cost" || s == "sum_cost") return ObjectiveKind::kSumCost;
  return std::nullopt;
}

namespace {

// lo <= sum <= hi, as an equality when the bounds coincide.
void add_range(ConicBuilder& b, const std::vector<Term>& terms, double lo, double hi) {
  if (lo == hi) {
    b.add_equality(terms, lo);
    return;
  }
  if (std::isfinite(hi)) b.add_less_equal(terms, hi);
  if (std::isfinite(lo)) {
    std::vector<Term> neg;
    for (const Term& t : terms) neg.push_back({t.var, -t.coef});
    b.add_less_equal(neg, -lo);
  }
}

void add_device(ConicBuilder& b, const InjectionSet& set, int p, int q) {
  if (const auto* f = std::get_if<FixedInjection>(&set)) {
    b.add_equality({{p, 1.0}}, f->s.real());
    b.add_equality({{q, 1.0}}, f->s.imag());
  } else if (const auto* x = std::get_if<BoxInjection>(&set)) {
    add_range(b, {{p, 1.0}}, x->p_lo, x->p_hi);
    add_range(b, {{q, 1.0}}, x->q_lo, x->q_hi);
  } else if (const auto* v = std::get_if<InverterPvInjection>(&set)) {
    add_range(b, {{p, 1.0}}, 0.0, std::min(v->p_cap, v->s_cap));
    b.add_soc({{{}, v->s_cap}, {{{p, 1.0}}, 0.0}, {{{q, 1.0}}, 0.0}});
  } else if (const auto* c = std::get_if<ConstantPfInjection>(&set)) {
    add_range(b, {{p, 1.0}}, c->p_lo, c->p_hi);
    b.add_equality({{q, 1.0}, {p, -c->q_ratio()}}, 0.0);
  } else {
    throw ModelError("capacitor sets must be convexified before building a relaxation");
  }
}

// Adds f(sum terms) to the objective.
void add_cost(ConicBuilder& b, const CostFunction& f, const std::vector<Term>& terms) {
  if (const auto* l = std::get_if<LinearCost>(&f)) {
    for (const Term& t : terms) b.add_cost(t.var, l->a * t.coef);
    b.add_offset(l->b);
    return;
  }
  const auto& q = std::get<QuadraticCost>(f);
  for (const Term& t : terms) b.add_cost(t.var, q.a1 * t.coef);
  b.add_offset(q.a0);
  if (q.a2 == 0.0) return;
  // t >= x^2  <=>  (t + 1, t - 1, 2x) in Q^3
  const int epi = b.add_variable();
  b.add_cost(epi, q.a2);
  std::vector<Term> twice;
  for (const Term& t : terms) twice.push_back({t.var, 2.0 * t.coef});
  b.add_soc({{{{epi, 1.0}}, 1.0}, {{{epi, 1.0}}, -1.0}, {twice, 0.0}});
}

}  // namespace

Relaxation build_relaxation(const Network& net, Variant variant, ObjectiveKind objective) {
  const std::size_t nb = net.bus_count();
  const std::size_t nl = net.line_count();
  ConicBuilder b;
  Relaxation rel;
  rel.variant = variant;
  rel.objective = objective;
  RelaxationLayout& lay = rel.layout;

  lay.device_p.assign(nb, {});
  lay.device_q.assign(nb, {});
  std::vector<std::vector<Term>> bus_p(nb), bus_q(nb);
  for (std::size_t i = 1; i < nb; ++i) {
    for (const Device& d : net.bus(i).devices) {
      const ConvexifiedInjection cvx = convexify(d.set);
      lay.relaxed_discrete = lay.relaxed_discrete || cvx.relaxed;
      const int p = b.add_variable();
      const int q = b.add_variable();
      add_device(b, cvx.set, p, q);
      lay.device_p[i].push_back(p);
      lay.device_q[i].push_back(q);
      bus_p[i].push_back({p, 1.0});
      bus_q[i].push_back({q, 1.0});
    }
  }
  lay.p0 = b.add_variable();
  lay.q0 = b.add_variable();
  bus_p[0].push_back({lay.p0, 1.0});
  bus_q[0].push_back({lay.q0, 1.0});

  lay.v.assign(nb, -1);
  for (std::size_t i = 1; i < nb; ++i) lay.v[i] = b.add_variable();
  for (std::size_t k = 0; k < nl; ++k) {
    lay.P.push_back(b.add_variable());
    lay.Q.push_back(b.add_variable());
    lay.ell.push_back(b.add_variable());
  }

  // Voltage drop along each line.
  for (std::size_t k = 0; k < nl; ++k) {
    const Line& l = net.line(k);
    std::vector<Term> t{{lay.v[l.child], 1.0},
                        {lay.P[k], -2.0 * l.r},
                        {lay.Q[k], -2.0 * l.x},
                        {lay.ell[k], l.r * l.r + l.x * l.x}};
    double rhs = 0.0;
    if (l.parent == 0) {
      rhs = net.v0();
    } else {
      t.push_back({lay.v[l.parent], -1.0});
    }
    b.add_equality(t, rhs);
  }

  // Flow conservation at every bus.
  for (std::size_t i = 0; i < nb; ++i) {
    std::vector<Term> tp = bus_p[i], tq = bus_q[i];
    for (std::size_t c : net.children(i)) {
      const std::size_t k = Network::line_of(c);
      const Line& l = net.line(k);
      tp.push_back({lay.P[k], 1.0});
      tp.push_back({lay.ell[k], -l.r});
      tq.push_back({lay.Q[k], 1.0});
      tq.push_back({lay.ell[k], -l.x});
    }
    if (i != 0) {
      tp.push_back({lay.P[Network::line_of(i)], -1.0});
      tq.push_back({lay.Q[Network::line_of(i)], -1.0});
    }
    b.add_equality(tp, 0.0);
    b.add_equality(tq, 0.0);
  }

  // Voltage bounds.
  for (std::size_t i = 1; i < nb; ++i) {
    b.add_less_equal({{lay.v[i], -1.0}}, -net.bus(i).v_min);
    if (variant == Variant::kSocp && std::isfinite(net.bus(i).v_max)) {
      b.add_less_equal({{lay.v[i], 1.0}}, net.bus(i).v_max);
    }
  }
  if (variant == Variant::kSocpM) {
    // W-hat_i(s) = v0 + 2 sum over lines on the path of (r P-hat + x Q-hat).
    std::vector<std::vector<std::size_t>> subtree(nl);
    for (std::size_t k = 0; k < nl; ++k) subtree[k] = net.subtree_buses(k);
    for (std::size_t i = 1; i < nb; ++i) {
      if (!std::isfinite(net.bus(i).v_max)) continue;
      std::vector<double> cp(nb, 0.0), cq(nb, 0.0);
      for (std::size_t k : net.path_to_root(i)) {
        const Line& l = net.line(k);
        for (std::size_t m : subtree[k]) {
          cp[m] += 2.0 * l.r;
          cq[m] += 2.0 * l.x;
        }
      }
      std::vector<Term> t;
      for (std::size_t m = 1; m < nb; ++m) {
        if (cp[m] != 0.0) {
          for (const Term& d : bus_p[m]) t.push_back({d.var, cp[m]});
        }
        if (cq[m] != 0.0) {
          for (const Term& d : bus_q[m]) t.push_back({d.var, cq[m]});
        }
      }
      b.add_less_equal(t, net.bus(i).v_max - net.v0());
    }
  }

  // l v_i >= P^2 + Q^2  <=>  (l + v, l - v, 2P, 2Q) in Q^4
  for (std::size_t k = 0; k < nl; ++k) {
    const int vi = lay.v[net.line(k).child];
    b.add_soc({{{{lay.ell[k], 1.0}, {vi, 1.0}}, 0.0},
               {{{lay.ell[k], 1.0}, {vi, -1.0}}, 0.0},
               {{{lay.P[k], 2.0}}, 0.0},
               {{{lay.Q[k], 2.0}}, 0.0}});
  }

  if (objective == ObjectiveKind::kLoss) {
    for (std::size_t k = 0; k < nl; ++k) b.add_cost(lay.ell[k], net.line(k).r);
  } else {
    for (std::size_t i = 0; i < nb; ++i) add_cost(b, net.bus(i).cost, bus_p[i]);
  }

  rel.program = b.build();
  return rel;
}

BranchFlowPoint extract_point(const Network& net, const RelaxationLayout& lay, const Eigen::VectorXd& x) {
  BranchFlowPoint w;
  const std::size_t nb = net.bus_count();
  w.s.assign(nb, Complex(0.0, 0.0));
  w.s[0] = {x[lay.p0], x[lay.q0]};
  for (std::size_t i = 1; i < nb; ++i) {
    for (std::size_t d = 0; d < lay.device_p[i].size(); ++d) {
      w.s[i] += Complex(x[lay.device_p[i][d]], x[lay.device_q[i][d]]);
    }
  }
  w.v.assign(nb, net.v0());
  for (std::size_t i = 1; i < nb; ++i) w.v[i] = x[lay.v[i]];
  for (std::size_t k = 0; k < net.line_count(); ++k) {
    w.S.emplace_back(x[lay.P[k]], x[lay.Q[k]]);
    w.ell.push_back(x[lay.ell[k]]);
  }
  return w;
}

RelaxationResult solve_relaxation(const Network& net, Variant variant, ObjectiveKind objective,
                                  const SolveSettings& settings) {
  const Relaxation rel = build_relaxation(net, variant, objective);
  RelaxationResult r;
  r.raw = solve_conic(rel.program, settings.conic);
  r.status = r.raw.status;
  r.relaxed_discrete = rel.layout.relaxed_discrete;
  if (r.status != ConicStatus::kOptimal && r.status != ConicStatus::kMaxIterations) return r;
  r.point = extract_point(net, rel.layout, r.raw.x);
  r.objective = objective_value(net, r.point, objective);
  r.gap = relative_gap(net, r.point);
  r.max_gap = r.gap.empty() ? 0.0 : *std::max_element(r.gap.begin(), r.gap.end());
  r.exact = r.status == ConicStatus::kOptimal && r.max_gap <= settings.exact_tol;
  return r;
}

std::vector<double> exactness_gap(const Network& net, const BranchFlowPoint& w) {
  std::vector<double> g;
  for (std::size_t k = 0; k < net.line_count(); ++k) {
    g.push_back(w.ell[k] * w.v[net.line(k).child] - std::norm(w.S[k]));
  }
  return g;
}

std::vector<double> relative_gap(const Network& net, const BranchFlowPoint& w) {
  std::vector<double> g = exactness_gap(net, w);
  for (std::size_t k = 0; k < g.size(); ++k) {
    g[k] /= std::abs(w.ell[k] * w.v[net.line(k).child]) + 1.0;
  }
  return g;
}

double max_relative_gap(const Network& net, const BranchFlowPoint& w) {
  double m = 0.0;
  for (double g : relative_gap(net, w)) m = std::max(m, std::abs(g));
  return m;
}

bool is_exact(const Network& net, const BranchFlowPoint& w, double tol) {
  return max_relative_gap(net, w) <= tol;
}

PowerFlowSolution recover_voltages(const Network& net, const BranchFlowPoint& w, double tol) {
  const double gap = max_relative_gap(net, w);
  if (!(gap <= tol)) {
    throw ModelError("point is not exact (max relative gap " + std::to_string(gap) + ")");
  }
  PowerFlowSolution pf;
  std::vector<double> theta(net.bus_count(), 0.0);
  pf.voltage.assign(net.bus_count(), Complex(std::sqrt(w.v[0]), 0.0));
  for (std::size_t i = 1; i < net.bus_count(); ++i) {
    const std::size_t k = Network::line_of(i);
    const Line& l = net.line(k);
    const Complex wij = w.v[i] - std::conj(l.z()) * w.S[k];
    theta[i] = theta[l.parent] + std::arg(wij);
    pf.voltage[i] = std::polar(std::sqrt(std::max(w.v[i], 0.0)), theta[i]);
  }
  pf.s0 = w.s[0];
  return pf;
}

double objective_value(const Network& net, const BranchFlowPoint& w, ObjectiveKind objective) {
  double f = 0.0;
  if (objective == ObjectiveKind::kLoss) {
    for (std::size_t k = 0; k < net.line_count(); ++k) f += net.line(k).r * w.ell[k];
    return f;
  }
  for (std::size_t i = 0; i < net.bus_count(); ++i) f += evaluate(net.bus(i).cost, w.s[i].real());
  return f;
}

LinearBoundMargins check_linear_bounds(const Network& net, const BranchFlowPoint& w) {
  const std::vector<Complex> S_hat = subtree_injection(net, w.s);
  const std::vector<double> W_hat = linear_voltage(net, w.s);
  LinearBoundMargins m;
  m.min_margin = kInf;
  for (std::size_t k = 0; k < net.line_count(); ++k) {
    m.P.push_back(S_hat[k].real() - w.S[k].real());
    m.Q.push_back(S_hat[k].imag() - w.S[k].imag());
    m.min_margin = std::min({m.min_margin, m.P.back(), m.Q.back()});
  }
  for (std::size_t i = 0; i < net.bus_count(); ++i) {
    m.v.push_back(W_hat[i] - w.v[i]);
    m.min_margin = std::min(m.min_margin, m.v.back());
  }
  return m;
}

double FeasibilityReport::worst(Variant variant) const {
  double m = std::max({voltage_drop, power_balance, voltage_lower, cone, injection});
  return std::max(m, variant == Variant::kSocp ? voltage_upper : linear_upper);
}

FeasibilityReport check_feasibility(const Network& net, const BranchFlowPoint& w) {
  FeasibilityReport f;
  const std::size_t nb = net.bus_count();
  f.voltage_drop = std::abs(w.v[0] - net.v0());
  for (std::size_t k = 0; k < net.line_count(); ++k) {
    const Line& l = net.line(k);
    const double res = w.v[l.child] - w.v[l.parent] -
                       2.0 * (l.r * w.S[k].real() + l.x * w.S[k].imag()) + std::norm(l.z()) * w.ell[k];
    f.voltage_drop = std::max(f.voltage_drop, std::abs(res));
    f.cone = std::max(f.cone, std::norm(w.S[k]) - w.ell[k] * w.v[l.child]);
  }
  for (std::size_t i = 0; i < nb; ++i) {
    Complex bal = w.s[i];
    for (std::size_t c : net.children(i)) {
      const std::size_t k = Network::line_of(c);
      bal += w.S[k] - net.line(k).z() * w.ell[k];
    }
    if (i != 0) bal -= w.S[Network::line_of(i)];
    f.power_balance = std::max(f.power_balance, std::abs(bal));
  }
  const std::vector<double> W_hat = linear_voltage(net, w.s);
  for (std::size_t i = 1; i < nb; ++i) {
    const Bus& bus = net.bus(i);
    f.voltage_lower = std::max(f.voltage_lower, bus.v_min - w.v[i]);
    if (std::isfinite(bus.v_max)) {
      f.voltage_upper = std::max(f.voltage_upper, w.v[i] - bus.v_max);
      f.linear_upper = std::max(f.linear_upper, W_hat[i] - bus.v_max);
    }
    InjectionBox box;
    for (const Device& d : bus.devices) box = box + injection_box(convexify(d.set).set);
    const double p = w.s[i].real(), q = w.s[i].imag();
    f.injection = std::max({f.injection, box.p_lo - p, p - box.p_hi, box.q_lo - q, q - box.q_hi});
  }
  return f;
}

CapacitorChoice solve_capacitor_enumeration(const Network& net, Variant variant, ObjectiveKind objective,
                                            const SolveSettings& settings) {
  std::vector<std::pair<std::size_t, std::size_t>> caps;
  for (std::size_t i = 1; i < net.bus_count(); ++i) {
    for (std::size_t d = 0; d < net.bus(i).devices.size(); ++d) {
      if (std::holds_alternative<CapacitorInjection>(net.bus(i).devices[d].set)) caps.push_back({i, d});
    }
  }
  if (caps.size() > 16) throw ModelError("too many capacitors to enumerate (" + std::to_string(caps.size()) + ")");
  CapacitorChoice best;
  bool found = false;
  for (std::uint32_t mask = 0; mask < (1u << caps.size()); ++mask) {
    std::vector<std::vector<Device>> devices;
    for (const Bus& bus : net.buses()) devices.push_back(bus.devices);
    std::vector<bool> on(caps.size());
    for (std::size_t c = 0; c < caps.size(); ++c) {
      Device& d = devices[caps[c].first][caps[c].second];
      on[c] = (mask >> c) & 1u;
      d.set = FixedInjection{Complex(0.0, on[c] ? std::get<CapacitorInjection>(d.set).q_cap : 0.0)};
    }
    RelaxationResult r = solve_relaxation(net.with_devices(devices), variant, objective, settings);
    if (r.status != ConicStatus::kOptimal) continue;
    if (!found || r.objective < best.result.objective) {
      best.result = std::move(r);
      best.switched_on = on;
      found = true;
    }
  }
  if (!found) best.result.status = ConicStatus::kPrimalInfeasible;
  return best;
}

}  // namespace opfkit
