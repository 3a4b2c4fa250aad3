#include "opfkit/conic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

namespace opfkit {

namespace {

using Vec = Eigen::VectorXd;
using Triplet = Eigen::Triplet<double>;

constexpr double kInfStep = std::numeric_limits<double>::infinity();

struct Scaling {
  Vec d;                       // nonnegative part: sqrt(s / z)
  std::vector<double> eta;     // per second-order cone
  std::vector<Vec> w;          // normalized scaling point, w'Jw = 1
  Vec lambda;                  // W z = W^-T s
};

class Cones {
 public:
  explicit Cones(const ConeProgram& p) : l_(p.nonneg), q_(p.soc) {
    int offset = l_;
    for (int m : q_) {
      start_.push_back(offset);
      offset += m;
    }
    dim_ = offset;
  }

  int dim() const { return dim_; }
  double degree() const { return static_cast<double>(l_ + static_cast<int>(q_.size())); }

  Vec identity() const {
    Vec e = Vec::Zero(dim_);
    e.head(l_).setOnes();
    for (int st : start_) e[st] = 1.0;
    return e;
  }

  // Largest t with x + t e on the boundary: min over blocks of x_i or x0 - |x1|.
  double min_margin(const Vec& x) const {
    double m = kInfStep;
    for (int i = 0; i < l_; ++i) m = std::min(m, x[i]);
    for (std::size_t k = 0; k < q_.size(); ++k) {
      const auto u = x.segment(start_[k], q_[k]);
      m = std::min(m, u[0] - u.tail(q_[k] - 1).norm());
    }
    return m;
  }

  bool interior(const Vec& x) const {
    for (int i = 0; i < l_; ++i) {
      if (!(x[i] > 0.0)) return false;
    }
    for (std::size_t k = 0; k < q_.size(); ++k) {
      const auto u = x.segment(start_[k], q_[k]);
      const double t = u.tail(q_[k] - 1).squaredNorm();
      if (!(u[0] > 0.0) || !(u[0] * u[0] - t > 0.0)) return false;
    }
    return true;
  }

  // Largest t with x + t d in the cone; x interior.
  double max_step(const Vec& x, const Vec& d) const {
    double t = kInfStep;
    for (int i = 0; i < l_; ++i) {
      if (d[i] < 0.0) t = std::min(t, -x[i] / d[i]);
    }
    for (std::size_t k = 0; k < q_.size(); ++k) {
      const int m = q_[k];
      const auto u = x.segment(start_[k], m);
      const auto v = d.segment(start_[k], m);
      const double a = v[0] * v[0] - v.tail(m - 1).squaredNorm();
      const double b = u[0] * v[0] - u.tail(m - 1).dot(v.tail(m - 1));
      const double c = std::max(u[0] * u[0] - u.tail(m - 1).squaredNorm(), 0.0);
      // roots of a t^2 + 2 b t + c
      double root = kInfStep;
      if (std::abs(a) <= 1e-300) {
        if (b < 0.0) root = -c / (2.0 * b);
      } else {
        const double disc = b * b - a * c;
        if (disc >= 0.0) {
          const double sq = std::sqrt(disc);
          const double qq = -(b + std::copysign(sq, b));
          for (double r : {qq / a, qq != 0.0 ? c / qq : kInfStep}) {
            if (r > 0.0) root = std::min(root, r);
          }
        }
      }
      if (v[0] < 0.0) root = std::min(root, -u[0] / v[0]);
      t = std::min(t, root);
    }
    return t;
  }

  Vec product(const Vec& u, const Vec& v) const {
    Vec out(dim_);
    out.head(l_) = u.head(l_).cwiseProduct(v.head(l_));
    for (std::size_t k = 0; k < q_.size(); ++k) {
      const int st = start_[k], m = q_[k];
      out[st] = u.segment(st, m).dot(v.segment(st, m));
      out.segment(st + 1, m - 1) = u[st] * v.segment(st + 1, m - 1) + v[st] * u.segment(st + 1, m - 1);
    }
    return out;
  }

  // x with lambda o x = v.
  Vec divide(const Vec& lambda, const Vec& v) const {
    Vec out(dim_);
    out.head(l_) = v.head(l_).cwiseQuotient(lambda.head(l_));
    for (std::size_t k = 0; k < q_.size(); ++k) {
      const int st = start_[k], m = q_[k];
      const double l0 = lambda[st];
      const auto l1 = lambda.segment(st + 1, m - 1);
      const auto v1 = v.segment(st + 1, m - 1);
      const double det = l0 * l0 - l1.squaredNorm();
      const double x0 = (l0 * v[st] - l1.dot(v1)) / det;
      out[st] = x0;
      out.segment(st + 1, m - 1) = (v1 - x0 * l1) / l0;
    }
    return out;
  }

  Scaling scaling(const Vec& s, const Vec& z) const {
    Scaling w;
    w.d = s.head(l_).cwiseQuotient(z.head(l_)).cwiseSqrt();
    for (std::size_t k = 0; k < q_.size(); ++k) {
      const int st = start_[k], m = q_[k];
      const auto sk = s.segment(st, m);
      const auto zk = z.segment(st, m);
      const double sres = std::sqrt(std::max(sk[0] * sk[0] - sk.tail(m - 1).squaredNorm(), 1e-300));
      const double zres = std::sqrt(std::max(zk[0] * zk[0] - zk.tail(m - 1).squaredNorm(), 1e-300));
      Vec sb = sk / sres;
      Vec zb = zk / zres;
      const double gamma = std::sqrt(std::max((1.0 + sb.dot(zb)) / 2.0, 1e-300));
      Vec wb(m);
      wb[0] = (sb[0] + zb[0]) / (2.0 * gamma);
      wb.tail(m - 1) = (sb.tail(m - 1) - zb.tail(m - 1)) / (2.0 * gamma);
      w.eta.push_back(std::sqrt(sres / zres));
      w.w.push_back(std::move(wb));
    }
    w.lambda = apply(w, z, false);
    return w;
  }

  // W u, or W^-1 u. W is symmetric.
  Vec apply(const Scaling& w, const Vec& u, bool inverse) const {
    Vec out(dim_);
    if (inverse) {
      out.head(l_) = u.head(l_).cwiseQuotient(w.d);
    } else {
      out.head(l_) = u.head(l_).cwiseProduct(w.d);
    }
    for (std::size_t k = 0; k < q_.size(); ++k) {
      const int st = start_[k], m = q_[k];
      const double sign = inverse ? -1.0 : 1.0;
      const double eta = inverse ? 1.0 / w.eta[k] : w.eta[k];
      const double w0 = w.w[k][0];
      const Vec w1 = sign * w.w[k].tail(m - 1);
      const double u0 = u[st];
      const auto u1 = u.segment(st + 1, m - 1);
      const double w1u1 = w1.dot(u1);
      out[st] = eta * (w0 * u0 + w1u1);
      out.segment(st + 1, m - 1) = eta * (u1 + (u0 + w1u1 / (1.0 + w0)) * w1);
    }
    return out;
  }

  // Lower triangle of -(W'W + delta I) at (offset, offset).
  void add_scaling_block(const Scaling& w, int offset, double delta, std::vector<Triplet>& t,
                         bool both_triangles) const {
    for (int i = 0; i < l_; ++i) t.emplace_back(offset + i, offset + i, -(w.d[i] * w.d[i] + delta));
    for (std::size_t k = 0; k < q_.size(); ++k) {
      const int st = start_[k], m = q_[k];
      const Vec& wb = w.w[k];
      const double e2 = w.eta[k] * w.eta[k];
      for (int c = 0; c < m; ++c) {
        for (int r = both_triangles ? 0 : c; r < m; ++r) {
          double v = 2.0 * wb[r] * wb[c];
          if (r == c) v += (r == 0 ? -1.0 : 1.0);
          v *= e2;
          if (r == c) v += delta;
          t.emplace_back(offset + st + r, offset + st + c, -v);
        }
      }
    }
  }

 private:
  int l_;
  std::vector<int> q_;
  std::vector<int> start_;
  int dim_ = 0;
};

class Kkt {
 public:
  Kkt(const ConeProgram& p, const Cones& cones)
      : p_(p), cones_(cones), n_(static_cast<int>(p.c.size())), m_(static_cast<int>(p.b.size())),
        k_(static_cast<int>(p.h.size())) {}

  bool factor(const Scaling& w) {
    w_ = &w;
    const SparseMatrix K = assemble(w, false);
    if (!analyzed_) {
      ldlt_.analyzePattern(K);
      analyzed_ = true;
    }
    ldlt_.factorize(K);
    use_lu_ = ldlt_.info() != Eigen::Success;
    if (use_lu_) {
      lu_.compute(assemble(w, true));
      if (lu_.info() != Eigen::Success) return false;
    }
    return true;
  }

  Vec solve(const Vec& rhs) const {
    Vec x = raw_solve(rhs);
    const double scale = 1.0 + rhs.lpNorm<Eigen::Infinity>();
    for (int it = 0; it < 30; ++it) {
      const Vec r = rhs - multiply(x);
      if (!r.allFinite() || r.lpNorm<Eigen::Infinity>() <= 1e-14 * scale) break;
      x += raw_solve(r);
    }
    return x;
  }

 private:
  Vec raw_solve(const Vec& rhs) const { return use_lu_ ? Vec(lu_.solve(rhs)) : Vec(ldlt_.solve(rhs)); }

  // Unregularized K v.
  Vec multiply(const Vec& v) const {
    const auto x = v.head(n_);
    const auto y = v.segment(n_, m_);
    const Vec z = v.tail(k_);
    Vec out(n_ + m_ + k_);
    out.head(n_) = p_.A.transpose() * y + p_.G.transpose() * z;
    out.segment(n_, m_) = p_.A * x;
    out.tail(k_) = p_.G * x - cones_.apply(*w_, cones_.apply(*w_, z, false), false);
    return out;
  }

  SparseMatrix assemble(const Scaling& w, bool both_triangles) const {
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(n_ + m_ + 2 * (p_.A.nonZeros() + p_.G.nonZeros()) + 16 * k_));
    for (int i = 0; i < n_; ++i) t.emplace_back(i, i, kDelta);
    for (int i = 0; i < m_; ++i) t.emplace_back(n_ + i, n_ + i, -kDelta);
    for (int c = 0; c < p_.A.outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(p_.A, c); it; ++it) {
        t.emplace_back(n_ + static_cast<int>(it.row()), c, it.value());
        if (both_triangles) t.emplace_back(c, n_ + static_cast<int>(it.row()), it.value());
      }
    }
    for (int c = 0; c < p_.G.outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(p_.G, c); it; ++it) {
        t.emplace_back(n_ + m_ + static_cast<int>(it.row()), c, it.value());
        if (both_triangles) t.emplace_back(c, n_ + m_ + static_cast<int>(it.row()), it.value());
      }
    }
    cones_.add_scaling_block(w, n_ + m_, kDelta, t, both_triangles);
    SparseMatrix K(n_ + m_ + k_, n_ + m_ + k_);
    K.setFromTriplets(t.begin(), t.end());
    return K;
  }

  static constexpr double kDelta = 1e-9;

  const ConeProgram& p_;
  const Cones& cones_;
  int n_, m_, k_;
  const Scaling* w_ = nullptr;
  bool analyzed_ = false;
  bool use_lu_ = false;
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
  Eigen::SparseLU<SparseMatrix> lu_;
};

double norm_or_one(const Vec& v) { return std::max(1.0, v.norm()); }

void check_dimensions(const ConeProgram& p) {
  const auto n = p.c.size();
  int cone_rows = p.nonneg;
  for (int m : p.soc) {
    if (m < 1) throw std::invalid_argument("second-order cone of dimension < 1");
    cone_rows += m;
  }
  if (p.A.cols() != n || p.G.cols() != n || p.A.rows() != p.b.size() || p.G.rows() != p.h.size() ||
      p.h.size() != cone_rows || p.nonneg < 0) {
    throw std::invalid_argument("cone program dimensions are inconsistent");
  }
}

}  // namespace

const char* status_name(ConicStatus status) {
  switch (status) {
    case ConicStatus::kOptimal:
      return "optimal";
    case ConicStatus::kPrimalInfeasible:
      return "infeasible";
    case ConicStatus::kDualInfeasible:
      return "unbounded";
    case ConicStatus::kMaxIterations:
      return "max_iter";
    case ConicStatus::kNumericalError:
      break;
  }
  return "numerical_error";
}

namespace {

ConicSolution solve_ipm(const ConeProgram& p, const ConicSettings& settings) {
  const Cones cones(p);
  const int n = static_cast<int>(p.c.size());
  const int m = static_cast<int>(p.b.size());
  const int k = static_cast<int>(p.h.size());
  const Vec e = cones.identity();

  ConicSolution out;
  Kkt kkt(p, cones);

  // Starting point: least-norm primal and dual solutions shifted into the cone.
  Scaling unit;
  unit.d = Vec::Ones(p.nonneg);
  for (int q : p.soc) {
    unit.eta.push_back(1.0);
    Vec w = Vec::Zero(q);
    w[0] = 1.0;
    unit.w.push_back(w);
  }
  unit.lambda = e;
  if (!kkt.factor(unit)) return out;
  Vec rhs(n + m + k);
  rhs << Vec::Zero(n), p.b, p.h;
  Vec sol = kkt.solve(rhs);
  Vec x = sol.head(n);
  Vec s = -sol.tail(k);
  rhs << -p.c, Vec::Zero(m), Vec::Zero(k);
  sol = kkt.solve(rhs);
  Vec y = sol.segment(n, m);
  Vec z = sol.tail(k);

  double tau = 1.0, kappa = 1.0;
  double shift_s = 1.0, shift_z = 1.0;
  if (settings.perturbation_seed) {
    std::mt19937_64 rng(*settings.perturbation_seed);
    std::uniform_real_distribution<double> u(0.5, 3.0);
    std::normal_distribution<double> g(0.0, 1.0);
    shift_s = u(rng);
    shift_z = u(rng);
    tau = u(rng);
    kappa = u(rng);
    const double scale = 0.1 * (1.0 + x.lpNorm<Eigen::Infinity>());
    for (int i = 0; i < n; ++i) x[i] = tau * x[i] + scale * g(rng);
    y *= tau;
  }
  {
    const double ms = cones.min_margin(s);
    if (k > 0 && ms <= 1e-8 * std::max(1.0, s.norm())) s += (shift_s - ms) * e;
    const double mz = cones.min_margin(z);
    if (k > 0 && mz <= 1e-8 * std::max(1.0, z.norm())) z += (shift_z - mz) * e;
    if (settings.perturbation_seed) {
      s += shift_s * e;
      z += shift_z * e;
    }
  }

  const double deg = cones.degree() + 1.0;
  const double nb = norm_or_one(p.b), nh = norm_or_one(p.h), nc = norm_or_one(p.c);

  for (int iter = 0;; ++iter) {
    out.iterations = iter;
    const Vec rx = p.A.transpose() * y + p.G.transpose() * z + tau * p.c;
    const Vec ry = p.A * x - tau * p.b;
    const Vec rz = s + p.G * x - tau * p.h;
    const double cx = p.c.dot(x), by = p.b.dot(y), hz = p.h.dot(z);
    const double rt = kappa + cx + by + hz;
    const double sz = s.dot(z);
    const double mu = (sz + kappa * tau) / deg;

    out.primal_objective = cx / tau + p.offset;
    out.dual_objective = -(by + hz) / tau + p.offset;
    out.primal_residual = std::max(ry.norm() / tau / nb, rz.norm() / tau / nh);
    out.dual_residual = rx.norm() / tau / nc;
    out.gap = sz / (tau * tau);
    out.x = x / tau;
    out.y = y / tau;
    out.z = z / tau;
    out.s = s / tau;

    if (!std::isfinite(mu) || !x.allFinite() || !z.allFinite()) {
      out.status = ConicStatus::kNumericalError;
      return out;
    }
    const double scale = std::max(1.0, std::min(std::abs(out.primal_objective - p.offset),
                                                 std::abs(out.dual_objective - p.offset)));
    if (out.primal_residual <= settings.feas_tol && out.dual_residual <= settings.feas_tol &&
        out.gap <= settings.gap_tol * scale) {
      out.status = ConicStatus::kOptimal;
      return out;
    }
    if (by + hz < 0.0) {
      const double cert = (p.A.transpose() * y + p.G.transpose() * z).norm() / -(by + hz);
      if (cert <= settings.feas_tol) {
        out.status = ConicStatus::kPrimalInfeasible;
        out.y = y / -(by + hz);
        out.z = z / -(by + hz);
        return out;
      }
    }
    if (cx < 0.0) {
      const double cert = std::max((p.A * x).norm(), (p.G * x + s).norm()) / -cx;
      if (cert <= settings.feas_tol) {
        out.status = ConicStatus::kDualInfeasible;
        out.x = x / -cx;
        out.s = s / -cx;
        return out;
      }
    }
    if (iter >= settings.max_iter) {
      out.status = ConicStatus::kMaxIterations;
      return out;
    }

    const Scaling w = cones.scaling(s, z);
    if (!kkt.factor(w)) {
      out.status = ConicStatus::kNumericalError;
      return out;
    }
    const Vec& lambda = w.lambda;

    rhs << -p.c, p.b, p.h;
    const Vec u2 = kkt.solve(rhs);
    const auto x2 = u2.head(n);
    const auto y2 = u2.segment(n, m);
    const auto z2 = u2.tail(k);
    const double denom_base = p.c.dot(x2) + p.b.dot(y2) + p.h.dot(z2) - kappa / tau;

    struct Direction {
      Vec dx, dy, dz, ds;
      double dtau = 0.0, dkappa = 0.0;
    };
    const auto direction = [&](double eta, const Vec& ds_target, double dk_target) {
      rhs << -(1.0 - eta) * rx, -(1.0 - eta) * ry,
          -(1.0 - eta) * rz - cones.apply(w, cones.divide(lambda, ds_target), false);
      const Vec u1 = kkt.solve(rhs);
      const auto x1 = u1.head(n);
      const auto y1 = u1.segment(n, m);
      const auto z1 = u1.tail(k);
      Direction d;
      d.dtau = (-(1.0 - eta) * rt - dk_target / tau - (p.c.dot(x1) + p.b.dot(y1) + p.h.dot(z1))) /
               denom_base;
      d.dx = x1 + d.dtau * x2;
      d.dy = y1 + d.dtau * y2;
      d.dz = z1 + d.dtau * z2;
      d.ds = cones.apply(w, cones.divide(lambda, ds_target) - cones.apply(w, d.dz, false), false);
      d.dkappa = (dk_target - kappa * d.dtau) / tau;
      return d;
    };
    const auto step_to_boundary = [&](const Direction& d) {
      double t = std::min(cones.max_step(s, d.ds), cones.max_step(z, d.dz));
      if (d.dtau < 0.0) t = std::min(t, -tau / d.dtau);
      if (d.dkappa < 0.0) t = std::min(t, -kappa / d.dkappa);
      return t;
    };

    const Vec lam2 = cones.product(lambda, lambda);
    const Direction aff = direction(0.0, -lam2, -kappa * tau);
    const double alpha_aff = std::min(1.0, step_to_boundary(aff));
    const double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3.0), 0.0, 1.0);

    const Vec ds_scaled = cones.apply(w, aff.ds, true);
    const Vec dz_scaled = cones.apply(w, aff.dz, false);
    const Vec target = -lam2 - cones.product(ds_scaled, dz_scaled) + sigma * mu * e;
    const Direction d = direction(sigma, target, -kappa * tau - aff.dtau * aff.dkappa + sigma * mu);
    double alpha = std::min(1.0, settings.step_fraction * step_to_boundary(d));
    if (!(alpha > 0.0)) {
      out.status = ConicStatus::kNumericalError;
      return out;
    }
    for (int back = 0; back < 60; ++back) {
      const Vec s_new = s + alpha * d.ds;
      const Vec z_new = z + alpha * d.dz;
      if (cones.interior(s_new) && cones.interior(z_new) && tau + alpha * d.dtau > 0.0 &&
          kappa + alpha * d.dkappa > 0.0) {
        break;
      }
      alpha *= 0.5;
    }
    x += alpha * d.dx;
    y += alpha * d.dy;
    z += alpha * d.dz;
    s += alpha * d.ds;
    tau += alpha * d.dtau;
    kappa += alpha * d.dkappa;
  }
}

constexpr double kReleaseTol = 1e-6;
constexpr double kActiveRatio = 1e-3;
// Relative distance below which a cone slack counts as on the boundary.
constexpr double kBoundaryTol = 1e-5;

// The program with the rows in `active` as equalities and the other
// nonnegative rows dropped. Only the second-order cones stay conic.
ConeProgram reduced_program(const ConeProgram& p, const std::vector<int>& active) {
  const int n = static_cast<int>(p.c.size());
  const int m = static_cast<int>(p.b.size());
  const int l = p.nonneg;
  const int k = static_cast<int>(p.h.size());
  const int a = static_cast<int>(active.size());
  const Eigen::SparseMatrix<double, Eigen::RowMajor> G = p.G;
  ConeProgram q;
  q.c = p.c;
  q.offset = p.offset;
  q.soc = p.soc;
  q.nonneg = 0;
  std::vector<Triplet> ta, tg;
  for (int c = 0; c < p.A.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(p.A, c); it; ++it) ta.emplace_back(it.row(), c, it.value());
  }
  q.b.resize(m + a);
  q.b.head(m) = p.b;
  for (int r = 0; r < a; ++r) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(G, active[r]); it; ++it) {
      ta.emplace_back(m + r, it.col(), it.value());
    }
    q.b[m + r] = p.h[active[r]];
  }
  for (int r = l; r < k; ++r) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(G, r); it; ++it) {
      tg.emplace_back(r - l, it.col(), it.value());
    }
  }
  q.A.resize(m + a, n);
  q.A.setFromTriplets(ta.begin(), ta.end());
  q.G.resize(k - l, n);
  q.G.setFromTriplets(tg.begin(), tg.end());
  q.h = p.h.tail(k - l);
  return q;
}

// Newton on the optimality conditions of a program with cones only. Cones
// whose dual is on the boundary are held there: s'Js = 0 and z = kappa J s.
// The other cones get z = 0 and must stay interior.
std::optional<ConicSolution> newton_refine(const ConeProgram& q, const ConicSolution& r) {
  const int n = static_cast<int>(q.c.size());
  const int m = static_cast<int>(q.b.size());
  const int k = static_cast<int>(q.h.size());
  std::vector<int> start, size, cone_of_active;
  std::vector<char> active;
  for (int off = 0; int dim : q.soc) {
    const double margin = (r.s[off] - r.s.segment(off + 1, dim - 1).norm()) / r.s.segment(off, dim).norm();
    active.push_back(margin < kBoundaryTol);
    if (active.back()) {
      if (!(r.s[off] > 0.0) || r.s.segment(off, dim).norm() < 1e-6) return std::nullopt;
      cone_of_active.push_back(static_cast<int>(start.size()));
    }
    start.push_back(off);
    size.push_back(dim);
    off += dim;
  }
  const int na = static_cast<int>(cone_of_active.size());
  const auto jsign = [&](int row) {
    const auto it = std::upper_bound(start.begin(), start.end(), row);
    return row == *(it - 1) ? 1.0 : -1.0;
  };

  Vec x = r.x, y = r.y, kappa(na);
  for (int j = 0; j < na; ++j) {
    const int c = cone_of_active[j];
    kappa[j] = r.z[start[c]] / r.s[start[c]];
  }
  const SparseMatrix At = q.A.transpose();
  const SparseMatrix Gt = q.G.transpose();
  const double scale = 1.0 + std::max({q.c.lpNorm<Eigen::Infinity>(), q.b.lpNorm<Eigen::Infinity>(),
                                       q.h.lpNorm<Eigen::Infinity>()});
  double last = kInfStep;
  for (int it = 0; it < 20; ++it) {
    const Vec s = q.h - q.G * x;
    Vec js = Vec::Zero(k), dual = Vec::Zero(k);
    std::vector<Triplet> tw, td;
    for (int j = 0; j < na; ++j) {
      const int c = cone_of_active[j];
      for (int i = start[c]; i < start[c] + size[c]; ++i) {
        const double sg = jsign(i);
        js[i] = sg * s[i];
        dual[i] = kappa[j] * js[i];
        tw.emplace_back(i, j, js[i]);
        td.emplace_back(i, i, kappa[j] * sg);
      }
    }
    Vec F(n + m + na);
    F.head(n) = q.c + At * y + Gt * dual;
    F.segment(n, m) = q.A * x - q.b;
    for (int j = 0; j < na; ++j) {
      const int c = cone_of_active[j];
      F[n + m + j] = 0.5 * s.segment(start[c], size[c]).dot(js.segment(start[c], size[c]));
    }
    const double res = F.lpNorm<Eigen::Infinity>();
    if (!std::isfinite(res)) return std::nullopt;
    if (res <= 1e-14 * scale) break;
    if (res >= last) {
      if (res <= 1e-12 * scale) break;
      return std::nullopt;
    }
    last = res;

    SparseMatrix W(k, na), D(k, k);
    W.setFromTriplets(tw.begin(), tw.end());
    D.setFromTriplets(td.begin(), td.end());
    const SparseMatrix H = -(Gt * D * q.G);
    const SparseMatrix GW = Gt * W;
    std::vector<Triplet> t;
    const auto put = [&](const SparseMatrix& M, int r0, int c0, double sign) {
      for (int c = 0; c < M.outerSize(); ++c) {
        for (SparseMatrix::InnerIterator e(M, c); e; ++e) {
          t.emplace_back(r0 + static_cast<int>(e.row()), c0 + c, sign * e.value());
        }
      }
    };
    put(H, 0, 0, 1.0);
    put(At, 0, n, 1.0);
    put(GW, 0, n + m, 1.0);
    put(q.A, n, 0, 1.0);
    const SparseMatrix WG = GW.transpose();
    put(WG, n + m, 0, -1.0);
    SparseMatrix Jac(n + m + na, n + m + na);
    Jac.setFromTriplets(t.begin(), t.end());
    Eigen::SparseLU<SparseMatrix> lu;
    lu.compute(Jac);
    if (lu.info() != Eigen::Success) return std::nullopt;
    const Vec d = lu.solve(F);
    if (lu.info() != Eigen::Success || !d.allFinite()) return std::nullopt;
    x -= d.head(n);
    y -= d.segment(n, m);
    kappa -= d.tail(na);
  }
  ConicSolution out = r;
  out.x = x;
  out.y = y;
  out.s = q.h - q.G * x;
  out.z = Vec::Zero(k);
  for (int j = 0; j < na; ++j) {
    if (kappa[j] < 0.0) return std::nullopt;
    const int c = cone_of_active[j];
    for (int i = start[c]; i < start[c] + size[c]; ++i) out.z[i] = kappa[j] * jsign(i) * out.s[i];
  }
  for (std::size_t c = 0; c < start.size(); ++c) {
    const double margin = out.s[start[c]] - out.s.segment(start[c] + 1, size[c] - 1).norm();
    if (margin < -1e-12 * scale) return std::nullopt;
  }
  return out;
}

// Active-set refinement of an interior-point solution. Starts from the rows
// with s < kActiveRatio z, adds dropped rows that end up violated and releases rows whose
// multiplier is clearly negative. Multipliers within kReleaseTol of zero
// belong to degenerate rows and are clamped. The reduced solution is then
// sharpened by newton_refine when possible.
std::optional<ConicSolution> polish(const ConeProgram& p, const ConicSolution& sol, const ConicSettings& settings) {
  const int m = static_cast<int>(p.b.size());
  const int l = p.nonneg;
  const int k = static_cast<int>(p.h.size());
  const double release = kReleaseTol * std::max(1.0, p.c.lpNorm<Eigen::Infinity>());
  std::vector<char> in(static_cast<std::size_t>(l), 0);
  for (int i = 0; i < l; ++i) in[i] = sol.s[i] < kActiveRatio * sol.z[i] && sol.z[i] > release;
  int iterations = sol.iterations;

  for (int round = 0; round < 8; ++round) {
    std::vector<int> active;
    for (int i = 0; i < l; ++i) {
      if (in[i]) active.push_back(i);
    }
    const ConeProgram q = reduced_program(p, active);
    ConicSolution r = solve_ipm(q, settings);
    iterations += r.iterations;
    if (r.status != ConicStatus::kOptimal) return std::nullopt;
    if (std::optional<ConicSolution> sharp = newton_refine(q, r)) r = *sharp;

    const Vec slack = p.h - p.G * r.x;
    bool changed = false;
    for (int i = 0; i < l; ++i) {
      if (!in[i] && slack[i] < -settings.feas_tol * (1.0 + std::abs(p.h[i]))) {
        in[i] = 1;
        changed = true;
      }
    }
    if (!changed) {
      for (std::size_t j = 0; j < active.size(); ++j) {
        if (r.y[m + static_cast<int>(j)] < -release) {
          in[active[j]] = 0;
          changed = true;
        }
      }
    }
    if (changed) continue;

    ConicSolution out = r;
    out.y = r.y.head(m);
    out.z = Vec::Zero(k);
    out.s = Vec::Zero(k);
    for (int i = 0; i < l; ++i) out.s[i] = std::max(slack[i], 0.0);
    for (std::size_t j = 0; j < active.size(); ++j) {
      out.z[active[j]] = std::max(r.y[m + static_cast<int>(j)], 0.0);
    }
    out.z.tail(k - l) = r.z;
    out.s.tail(k - l) = r.s;
    out.primal_objective = p.c.dot(out.x) + p.offset;
    out.dual_objective = -p.b.dot(out.y) - p.h.dot(out.z) + p.offset;
    out.primal_residual = std::max((p.A * out.x - p.b).norm() / norm_or_one(p.b),
                                   (p.G * out.x + out.s - p.h).norm() / norm_or_one(p.h));
    out.dual_residual = (p.c + p.A.transpose() * out.y + p.G.transpose() * out.z).norm() / norm_or_one(p.c);
    out.gap = out.s.dot(out.z);
    const double scale = std::max(1.0, std::abs(sol.primal_objective));
    if (out.primal_objective > sol.primal_objective + settings.gap_tol * scale) return std::nullopt;
    out.iterations = iterations;
    out.polished = true;
    return out;
  }
  return std::nullopt;
}

}  // namespace

ConicSolution solve_conic(const ConeProgram& p, const ConicSettings& settings) {
  check_dimensions(p);
  ConicSolution sol = solve_ipm(p, settings);
  if (sol.status != ConicStatus::kOptimal || !settings.polish || p.nonneg == 0) return sol;
  std::optional<ConicSolution> refined = polish(p, sol, settings);
  return refined ? *refined : sol;
}

int ConicBuilder::add_variable() {
  cost_.push_back(0.0);
  return n_++;
}

void ConicBuilder::add_cost(int var, double coef) { cost_.at(static_cast<std::size_t>(var)) += coef; }

void ConicBuilder::add_equality(const std::vector<Term>& terms, double rhs) {
  eq_rows_.push_back(terms);
  eq_rhs_.push_back(rhs);
}

void ConicBuilder::add_less_equal(const std::vector<Term>& terms, double rhs) {
  le_rows_.push_back(terms);
  le_rhs_.push_back(rhs);
}

void ConicBuilder::add_soc(const std::vector<Affine>& components) {
  if (components.empty()) throw std::invalid_argument("empty second-order cone");
  cones_.push_back(components);
}

ConeProgram ConicBuilder::build() const {
  ConeProgram p;
  p.c = Eigen::Map<const Vec>(cost_.data(), n_);
  p.offset = offset_;
  std::vector<Triplet> ta;
  for (std::size_t r = 0; r < eq_rows_.size(); ++r) {
    for (const Term& t : eq_rows_[r]) ta.emplace_back(static_cast<int>(r), t.var, t.coef);
  }
  p.A.resize(static_cast<int>(eq_rows_.size()), n_);
  p.A.setFromTriplets(ta.begin(), ta.end());
  p.b = Eigen::Map<const Vec>(eq_rhs_.data(), static_cast<int>(eq_rhs_.size()));

  std::vector<Triplet> tg;
  std::vector<double> h;
  int row = 0;
  for (std::size_t r = 0; r < le_rows_.size(); ++r, ++row) {
    for (const Term& t : le_rows_[r]) tg.emplace_back(row, t.var, t.coef);
    h.push_back(le_rhs_[r]);
  }
  p.nonneg = static_cast<int>(le_rows_.size());
  for (const auto& cone : cones_) {
    for (const Affine& a : cone) {
      for (const Term& t : a.terms) tg.emplace_back(row, t.var, -t.coef);
      h.push_back(a.constant);
      ++row;
    }
    p.soc.push_back(static_cast<int>(cone.size()));
  }
  p.G.resize(row, n_);
  p.G.setFromTriplets(tg.begin(), tg.end());
  p.h = Eigen::Map<const Vec>(h.data(), row);
  return p;
}

}  // namespace opfkit
