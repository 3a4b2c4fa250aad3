#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "opfkit/network.hpp"
#include "opfkit/powerflow.hpp"

namespace opfkit {

class NotCheckableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Line-indexed sum of injections in the subtree below each line.
std::vector<Complex> subtree_injection(const Network& net, const BusVector& s);

// Bus-indexed lossless squared voltage, entry 0 is v0.
std::vector<double> linear_voltage(const Network& net, const BusVector& s);

// Bus-indexed path products/sums of the linearized flow at (p_bar, q_bar).
// Substation entry is (1, 0, 0, 1).
struct ACoefficients {
  std::vector<double> a1, a2, a3, a4;
  double b_lo(std::size_t bus) const;  // a2 / a1, +inf if a1 <= 0
  double b_hi(std::size_t bus) const;  // a4 / a3, +inf if a3 == 0
};

// Bus-indexed upper bounds; entry 0 is ignored.
ACoefficients a_coefficients(const Network& net, const std::vector<double>& p_bar,
                             const std::vector<double>& q_bar);
// Bounds taken from the bus boxes. Throws NotCheckableError when one is infinite.
ACoefficients a_coefficients(const Network& net);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct LineCondition {
  std::size_t line = 0;
  double rx = 0.0;
  double margin_r = 0.0;  // a1_j r - a2_j x
  double margin_x = 0.0;  // a4_j x - a3_j r
  bool holds = false;
};

struct ConditionReport {
  bool holds = false;
  std::vector<LineCondition> lines;
  ACoefficients a;
  Interval rx;                   // range of r/x over lines
  Interval min_interval;         // (max b_lo, min b_hi) over buses
  std::size_t lo_bus = 0;
  std::size_t hi_bus = 0;
  bool interval_covers = false;  // rx strictly inside min_interval
};

ConditionReport check_c1(const Network& net);

Interval rx_range(const Network& net);

struct WellConstrainedLine {
  std::size_t line = 0;
  bool well_constrained = false;
  double alpha = 0.0;           // semicircle is [alpha, alpha + pi]
  std::vector<double> angles;   // angles generated by finite bounds
};

std::vector<WellConstrainedLine> check_well_constrained(const Network& net);

// Sufficient conditions for the key step on a tree.
struct SufficientConditions {
  bool no_reverse_flow = false;    // P-hat(p_bar) <= 0 and Q-hat(q_bar) <= 0
  bool uniform_ratio = false;      // equal adjacent r/x, v_min - 2rP+ - 2xQ+ > 0
  bool ratio_rising_p = false;     // downstream r/x >= upstream, P-hat <= 0, v_min - 2xQ+ > 0
  bool ratio_falling_q = false;    // downstream r/x <= upstream, Q-hat <= 0, v_min - 2rP+ > 0
  bool load_over_satisfaction = false;  // every lower injection bound is -inf
  bool any() const {
    return no_reverse_flow || uniform_ratio || ratio_rising_p || ratio_falling_q ||
           load_over_satisfaction;
  }
};

SufficientConditions check_sufficient_conditions(const Network& net);

struct EpsilonResult {
  double epsilon = 0.0;
  std::size_t bus = 0;               // arg max
  std::vector<double> per_bus;       // W-hat - |V|^2
  std::size_t samples = 1;
};

// Throws PowerFlowError if the sweep does not converge.
EpsilonResult epsilon_metric(const Network& net, const BusVector& s);
// Max over uniform samples of the injection sets; a lower bound on the true max.
EpsilonResult epsilon_sampled(const Network& net, std::size_t samples, std::uint64_t seed);

}  // namespace opfkit
