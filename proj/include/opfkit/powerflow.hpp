#pragma once

#include <stdexcept>
#include <vector>

#include "opfkit/network.hpp"

namespace opfkit {

class PowerFlowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Branch-flow variables. Bus-indexed vectors have bus_count() entries with
// the substation first (s[0] = s0, v[0] = v0); line-indexed vectors follow
// Network::lines().
struct BranchFlowPoint {
  BusVector s;
  std::vector<Complex> S;   // sending-end flow, child -> parent
  std::vector<double> ell;  // squared current magnitude
  std::vector<double> v;    // squared voltage magnitude
};

struct PowerFlowSettings {
  int max_sweeps = 100;
  double tolerance = 1e-12;  // max change in v between sweeps
};

struct PowerFlowSolution {
  std::vector<Complex> voltage;  // bus-indexed, voltage[0] = sqrt(v0)
  Complex s0;
  int sweeps = 0;
};

// s_i - V_i sum_j conj(y_ij) (conj(V_i) - conj(V_j)), bus-indexed; s[0] is
// the substation injection.
std::vector<Complex> pf_residual(const Network& net, const std::vector<Complex>& voltage,
                                 const BusVector& s);

// Backward/forward sweep from a flat start. s[0] is ignored.
PowerFlowSolution solve_power_flow(const Network& net, const BusVector& s,
                                   const PowerFlowSettings& settings = {});

// s[0] is replaced by the solution's substation injection.
BranchFlowPoint to_branch_flow(const Network& net, const PowerFlowSolution& pf, const BusVector& s);

}  // namespace opfkit
