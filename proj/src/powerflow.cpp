#include "opfkit/powerflow.hpp"

#include <cmath>
#include <string>

namespace opfkit {

namespace {

// Current on each line, child to parent, for the given voltages.
std::vector<Complex> line_currents(const Network& net, const std::vector<Complex>& V) {
  std::vector<Complex> I(net.line_count());
  for (std::size_t k = 0; k < net.line_count(); ++k) {
    const Line& l = net.line(k);
    I[k] = (V[l.child] - V[l.parent]) / l.z();
  }
  return I;
}

}  // namespace

std::vector<Complex> pf_residual(const Network& net, const std::vector<Complex>& voltage,
                                 const BusVector& s) {
  check_bus_vector(net, s, "pf_residual");
  check_bus_vector(net, voltage, "pf_residual voltage");
  std::vector<Complex> out(s);
  for (const Line& l : net.lines()) {
    const Complex y = 1.0 / l.z();
    const Complex vi = voltage[l.child];
    const Complex vj = voltage[l.parent];
    out[l.child] -= vi * std::conj(y) * (std::conj(vi) - std::conj(vj));
    out[l.parent] -= vj * std::conj(y) * (std::conj(vj) - std::conj(vi));
  }
  return out;
}

PowerFlowSolution solve_power_flow(const Network& net, const BusVector& s,
                                   const PowerFlowSettings& settings) {
  check_bus_vector(net, s, "solve_power_flow");
  const std::size_t nb = net.bus_count();
  PowerFlowSolution sol;
  sol.voltage.assign(nb, Complex(std::sqrt(net.v0()), 0.0));
  std::vector<Complex> I(net.line_count());

  bool converged = false;
  for (int sweep = 1; sweep <= settings.max_sweeps; ++sweep) {
    std::vector<Complex> acc(nb, Complex(0.0, 0.0));
    for (std::size_t i = nb; i-- > 1;) {
      const std::size_t k = Network::line_of(i);
      I[k] = std::conj(s[i] / sol.voltage[i]) + acc[i];
      acc[net.parent(i)] += I[k];
    }
    double change = 0.0;
    for (std::size_t i = 1; i < nb; ++i) {
      const std::size_t k = Network::line_of(i);
      const Complex v_new = sol.voltage[net.parent(i)] + net.line(k).z() * I[k];
      change = std::max(change, std::abs(std::norm(v_new) - std::norm(sol.voltage[i])));
      sol.voltage[i] = v_new;
    }
    sol.sweeps = sweep;
    if (!std::isfinite(change)) break;
    if (change <= settings.tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw PowerFlowError("backward/forward sweep did not converge in " +
                         std::to_string(settings.max_sweeps) + " sweeps");
  }
  for (std::size_t i = 1; i < nb; ++i) {
    if (std::norm(sol.voltage[i]) <= 0.0) throw PowerFlowError("sweep reached zero voltage");
  }

  const std::vector<Complex> current = line_currents(net, sol.voltage);
  Complex into_root(0.0, 0.0);
  for (std::size_t c : net.children(0)) into_root += current[Network::line_of(c)];
  sol.s0 = sol.voltage[0] * std::conj(-into_root);
  return sol;
}

BranchFlowPoint to_branch_flow(const Network& net, const PowerFlowSolution& pf, const BusVector& s) {
  check_bus_vector(net, s, "to_branch_flow");
  BranchFlowPoint w;
  w.s = s;
  w.s[0] = pf.s0;
  const std::vector<Complex> I = line_currents(net, pf.voltage);
  for (std::size_t k = 0; k < net.line_count(); ++k) {
    const Line& l = net.line(k);
    w.S.push_back(pf.voltage[l.child] * std::conj(I[k]));
    w.ell.push_back(std::norm(I[k]));
  }
  for (const Complex& v : pf.voltage) w.v.push_back(std::norm(v));
  return w;
}

}  // namespace opfkit
