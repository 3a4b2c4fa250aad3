#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "opfkit/network.hpp"
#include "opfkit/powerflow.hpp"
#include "opfkit/socp.hpp"

namespace opfkit {

// x rounded to `digits` significant digits (printf %.*g semantics).
double round_significant(double x, int digits = 12);

// {buses: [{id, p, q, v, v_mag, v_angle_rad}], lines: [{child, parent, P, Q,
// ell, gap}], s0, objective, exact, solver_stats}. Angles are null unless
// the point is exact. Numbers carry 12 significant digits.
std::string solution_to_json(const Network& net, const RelaxationResult& result, Variant variant,
                             ObjectiveKind objective, double exact_tol);

BranchFlowPoint parse_solution(const Network& net, std::string_view json_text);
BranchFlowPoint load_solution(const Network& net, const std::string& path);

}  // namespace opfkit
