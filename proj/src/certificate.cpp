#include "opfkit/certificate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "opfkit/scenarios.hpp"

namespace opfkit {

double cone_slack(const Network& net, const BranchFlowPoint& w, std::size_t line) {
  const double v = w.v.at(net.line(line).child);
  return w.ell.at(line) - std::norm(w.S.at(line)) / v;
}

std::optional<std::size_t> find_violating_line(const Network& net, const BranchFlowPoint& w, double tol) {
  const std::vector<double> gap = relative_gap(net, w);
  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < net.line_count(); ++k) {
    if (!(gap[k] > tol)) continue;
    bool path_exact = true;
    for (std::size_t up : net.path_to_root(net.line(k).parent)) {
      path_exact = path_exact && std::abs(gap[up]) <= tol;
    }
    if (!path_exact) continue;
    const std::size_t child = net.line(k).child;
    if (!best) {
      best = k;
      continue;
    }
    const std::size_t other = net.line(*best).child;
    const auto key = [&](std::size_t bus) { return std::make_pair(net.depth(bus), net.bus(bus).id); };
    if (key(child) < key(other)) best = k;
  }
  return best;
}

BranchFlowPoint construct_improved_point(const Network& net, const BranchFlowPoint& w, std::size_t line,
                                         double step, double tol) {
  if (line >= net.line_count()) throw std::invalid_argument("line index out of range");
  const std::vector<double> gap = relative_gap(net, w);
  if (!(gap[line] > tol)) throw std::invalid_argument("line has no cone slack");
  for (std::size_t up : net.path_to_root(net.line(line).parent)) {
    if (std::abs(gap[up]) > tol) throw std::invalid_argument("path above the line is not exact");
  }
  const double slack = cone_slack(net, w, line);
  if (!(step > 0.0) || step > slack * (1.0 + 1e-12)) {
    throw std::invalid_argument("step must lie in (0, " + std::to_string(slack) + "]");
  }

  BranchFlowPoint out = w;
  const std::vector<std::size_t> path = net.path_to_root(net.line(line).child);
  out.ell[line] = w.ell[line] - step;
  // Change of flow entering the upstream bus from the line just processed.
  Complex carried = -net.line(line).z() * (out.ell[line] - w.ell[line]);
  for (std::size_t t = 1; t < path.size(); ++t) {
    const std::size_t k = path[t];
    out.S[k] = w.S[k] + carried;
    const double v = w.v[net.line(k).child];
    const double P = std::max(out.S[k].real() * out.S[k].real(), w.S[k].real() * w.S[k].real());
    const double Q = std::max(out.S[k].imag() * out.S[k].imag(), w.S[k].imag() * w.S[k].imag());
    out.ell[k] = (P + Q) / v;
    carried = (out.S[k] - w.S[k]) - net.line(k).z() * (out.ell[k] - w.ell[k]);
  }
  out.s[0] = w.s[0] - carried;

  out.v[0] = w.v[0];
  for (std::size_t i = 1; i < net.bus_count(); ++i) {
    const std::size_t k = Network::line_of(i);
    const Line& l = net.line(k);
    out.v[i] = out.v[l.parent] + 2.0 * (l.r * out.S[k].real() + l.x * out.S[k].imag()) -
               std::norm(l.z()) * out.ell[k];
  }
  return out;
}

ImprovementAudit audit_improvement(const Network& net, const BranchFlowPoint& before,
                                   const BranchFlowPoint& after, Variant variant, ObjectiveKind objective,
                                   double feasibility_tol) {
  ImprovementAudit a;
  a.feasibility = check_feasibility(net, after);
  a.injections_unchanged = true;
  for (std::size_t i = 1; i < net.bus_count(); ++i) {
    a.injections_unchanged = a.injections_unchanged && after.s[i] == before.s[i];
  }
  a.worst_violation = a.feasibility.worst(variant);
  for (std::size_t i = 1; i < net.bus_count(); ++i) {
    const Bus& b = net.bus(i);
    if (before.v[i] >= b.v_max - feasibility_tol) {
      a.active_bound_push = std::max(a.active_bound_push, after.v[i] - before.v[i]);
    }
    if (before.v[i] <= b.v_min + feasibility_tol) {
      a.active_bound_push = std::max(a.active_bound_push, before.v[i] - after.v[i]);
    }
  }
  a.feasible = a.worst_violation <= feasibility_tol && a.active_bound_push <= 1e-12;
  a.objective_before = objective_value(net, before, objective);
  a.objective_after = objective_value(net, after, objective);
  a.delta = a.objective_after - a.objective_before;
  a.improved = a.delta < -1e-10;
  return a;
}

std::optional<Improvement> improve_point(const Network& net, const BranchFlowPoint& w, Variant variant,
                                         ObjectiveKind objective, double tol) {
  const std::optional<std::size_t> m = find_violating_line(net, w, tol);
  if (!m) return std::nullopt;
  Improvement first;
  first.line = *m;
  first.step = cone_slack(net, w, *m);
  Improvement imp = first;
  for (imp.halvings = 0; imp.halvings <= 60; ++imp.halvings) {
    imp.point = construct_improved_point(net, w, *m, imp.step, tol);
    imp.audit = audit_improvement(net, w, imp.point, variant, objective);
    if (imp.audit.accepted()) return imp;
    if (imp.halvings == 0) first = imp;
    imp.step *= 0.5;
  }
  first.halvings = 60;
  return first;
}

std::vector<KeyStepMatrix> key_step_matrices(const Network& net, const BranchFlowPoint& w) {
  std::vector<KeyStepMatrix> out;
  for (std::size_t k = 0; k < net.line_count(); ++k) {
    const Line& l = net.line(k);
    const double v = w.v[l.child];
    const double pp = std::max(w.S[k].real(), 0.0);
    const double qp = std::max(w.S[k].imag(), 0.0);
    out.push_back({1.0 - 2.0 * l.r * pp / v, 2.0 * l.r * qp / v, 2.0 * l.x * pp / v,
                   1.0 - 2.0 * l.x * qp / v});
  }
  return out;
}

KeyStepReport key_step_check(const Network& net, const BranchFlowPoint& w) {
  KeyStepReport rep;
  rep.matrices = key_step_matrices(net, w);
  for (std::size_t i = 1; i < net.bus_count(); ++i) {
    const std::vector<std::size_t> path = net.path_to_root(i);
    const int n = static_cast<int>(path.size());
    Eigen::Vector2d vec(net.line(path[0]).r, net.line(path[0]).x);
    for (int t = n; t >= 1; --t) {
      if (t < n) {
        const KeyStepMatrix& a = rep.matrices[path[static_cast<std::size_t>(n - t)]];
        vec = Eigen::Vector2d(a.c * vec[0] - a.d * vec[1], -a.e * vec[0] + a.f * vec[1]);
      }
      const bool positive = vec[0] > 0.0 && vec[1] > 0.0;
      rep.checks.push_back({i, t, vec, positive});
      rep.holds = rep.holds && positive;
    }
  }
  return rep;
}

MatrixLemmaResult check_matrix_lemma(const std::vector<double>& c, const std::vector<double>& d,
                                     const std::vector<double>& e, const std::vector<double>& f,
                                     const Eigen::Vector2d& u) {
  const std::size_t n = c.size();
  if (n == 0 || d.size() != n || e.size() != n || f.size() != n) {
    throw std::invalid_argument("matrix lemma: vectors must be nonempty and of equal length");
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!(c[j] > 0.0 && c[j] <= 1.0) || !(f[j] > 0.0 && f[j] <= 1.0) || !(d[j] >= 0.0) || !(e[j] >= 0.0)) {
      throw std::invalid_argument("matrix lemma: need 0 < c, f <= 1 and d, e >= 0");
    }
  }
  if (!(u[0] > 0.0 && u[1] > 0.0)) throw std::invalid_argument("matrix lemma: u must be positive");

  double pc = 1.0, pf = 1.0, sd = 0.0, se = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    pc *= c[j];
    pf *= f[j];
    sd += d[j];
    se += e[j];
  }
  MatrixLemmaResult r;
  r.hypothesis = pc * u[0] - sd * u[1] > 0.0 && -se * u[0] + pf * u[1] > 0.0;
  r.conclusion = true;
  Eigen::Vector2d vec = u;
  for (std::size_t j = n; j-- > 0;) {
    vec = Eigen::Vector2d(c[j] * vec[0] - d[j] * vec[1], -e[j] * vec[0] + f[j] * vec[1]);
    r.conclusion = r.conclusion && vec[0] > 0.0 && vec[1] > 0.0;
  }
  return r;
}

std::pair<Network, ObjectiveKind> two_bus_counterexample() {
  return {bundled_network("twobus_counterexample"), ObjectiveKind::kSumCost};
}

}  // namespace opfkit
