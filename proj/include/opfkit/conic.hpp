#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace opfkit {

using SparseMatrix = Eigen::SparseMatrix<double>;

// minimize c'x  subject to  A x = b,  G x + s = h,  s in K
// K = R+^nonneg x Q^soc[0] x Q^soc[1] ..., Q^m = {u : u0 >= |u1..|}.
struct ConeProgram {
  Eigen::VectorXd c;
  SparseMatrix A;
  Eigen::VectorXd b;
  SparseMatrix G;
  Eigen::VectorXd h;
  int nonneg = 0;
  std::vector<int> soc;
  double offset = 0.0;  // added to reported objectives
};

enum class ConicStatus { kOptimal, kPrimalInfeasible, kDualInfeasible, kMaxIterations, kNumericalError };

const char* status_name(ConicStatus status);

struct ConicSettings {
  double feas_tol = 1e-8;
  double gap_tol = 1e-8;
  int max_iter = 100;
  double step_fraction = 0.99;
  // Randomizes the starting point; same optimum, different central path.
  std::optional<std::uint64_t> perturbation_seed;
  // After an optimal solve, re-solve with the active nonnegative rows as
  // equalities and the inactive ones dropped. Kept only if the result is
  // feasible for the full program, its multipliers are nonnegative and the
  // objective does not get worse.
  bool polish = true;
};

struct ConicSolution {
  ConicStatus status = ConicStatus::kNumericalError;
  Eigen::VectorXd x, y, z, s;
  int iterations = 0;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  bool polished = false;
};

// Homogeneous self-dual primal-dual interior-point method with
// Nesterov-Todd scaling and Mehrotra correction.
ConicSolution solve_conic(const ConeProgram& problem, const ConicSettings& settings = {});

struct Term {
  int var;
  double coef;
};

struct Affine {
  std::vector<Term> terms;
  double constant = 0.0;
};

class ConicBuilder {
 public:
  int add_variable();
  int variable_count() const { return n_; }

  void add_cost(int var, double coef);
  void add_offset(double value) { offset_ += value; }
  // sum = rhs
  void add_equality(const std::vector<Term>& terms, double rhs);
  // sum <= rhs
  void add_less_equal(const std::vector<Term>& terms, double rhs);
  // components[0] >= |components[1..]|
  void add_soc(const std::vector<Affine>& components);

  int equality_count() const { return static_cast<int>(eq_rhs_.size()); }
  ConeProgram build() const;

 private:
  int n_ = 0;
  std::vector<double> cost_;
  double offset_ = 0.0;
  std::vector<std::vector<Term>> eq_rows_;
  std::vector<double> eq_rhs_;
  std::vector<std::vector<Term>> le_rows_;
  std::vector<double> le_rhs_;
  std::vector<std::vector<Affine>> cones_;
};

}  // namespace opfkit
