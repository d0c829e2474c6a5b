#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "evinc/convex_body.hpp"
#include "evinc/errors.hpp"
#include "evinc/rng.hpp"
#include "evinc/time_fn.hpp"
#include "evinc/vec.hpp"

namespace evinc {

inline double signed_power(double s, double p) {  // |s|^(p-2) s
  if (s == 0.0) return 0.0;
  return std::pow(std::fabs(s), p - 2.0) * s;
}

/// Growth and coercivity constants of an operator:
///   |A(t,x)|  <= a1(t) + c1 |x|^(p-1)
///   <A(t,x),x> >= c2 |x|^p - a2(t)
struct HypothesisConstants {
  TimeFn a1{0.0};
  double c1 = 0.0;
  double c2 = 0.0;
  TimeFn a2{0.0};
  double p = 2.0;
};

/// Requires p >= 2. At p = 2 the perturbation growth c3 must satisfy
/// beta^2 c3 < c2 against the operator coercivity; above 2 the condition
/// is vacuous.
inline bool smallness_check(double c2, double c3, double beta, double p) {
  if (p < 2.0) throw InputError("smallness_check: p must satisfy 2 <= p");
  if (!(c2 > 0.0) || !(c3 > 0.0) || !(beta > 0.0))
    throw InputError("smallness_check: constants must be positive");
  if (p > 2.0) return true;
  return beta * beta * c3 < c2;
}

/// One coordinate of a separable convex piecewise-linear potential:
/// breakpoints b_1 < ... < b_m with slopes s_0 <= ... <= s_m on the pieces.
struct PwlCoord {
  std::vector<double> breaks;
  std::vector<double> slopes;  // size breaks.size() + 1

  static PwlCoord abs_value(double weight = 1.0, double center = 0.0) {
    return PwlCoord{{center}, {-weight, weight}};
  }

  void validate() const {
    if (slopes.size() != breaks.size() + 1) throw InputError("PwlCoord: slope count");
    for (std::size_t i = 1; i < breaks.size(); ++i)
      if (!(breaks[i - 1] < breaks[i])) throw InputError("PwlCoord: breaks not increasing");
    for (std::size_t i = 1; i < slopes.size(); ++i)
      if (slopes[i - 1] > slopes[i]) throw InputError("PwlCoord: not convex");
  }

  // one-sided derivatives of the potential at x
  std::pair<double, double> subgradient(double x, double kink_tol = 0.0) const {
    std::size_t seg = 0;
    while (seg < breaks.size() && x > breaks[seg]) ++seg;
    double lo = slopes[seg], hi = slopes[seg];
    for (std::size_t j = 0; j < breaks.size(); ++j)
      if (std::fabs(x - breaks[j]) <= kink_tol) {
        lo = std::fmin(lo, slopes[j]);
        hi = std::fmax(hi, slopes[j + 1]);
      }
    return {lo, hi};
  }

  /// Exact proximal point: the x with x + h g = y for some g in the
  /// subdifferential at x.
  double prox(double h, double y) const {
    const std::size_t m = breaks.size();
    for (std::size_t seg = 0; seg <= m; ++seg) {
      const double x = y - h * slopes[seg];
      const double lo = (seg == 0) ? -std::numeric_limits<double>::infinity() : breaks[seg - 1];
      const double hi = (seg == m) ? std::numeric_limits<double>::infinity() : breaks[seg];
      if (x >= lo && x <= hi) return x;
    }
    for (std::size_t j = 0; j < m; ++j)
      if (y >= breaks[j] + h * slopes[j] && y <= breaks[j] + h * slopes[j + 1])
        return breaks[j];
    throw NumericalError("PwlCoord::prox: no segment matched", y);
  }
};

/// Conservative 1-d finite-difference discretization of
/// x |-> -(a(t,z) |x'|^(p-2) x')' with homogeneous Dirichlet boundary:
/// m interior nodes, weights at the m+1 half nodes, one-sided differences.
struct WeightedPLaplacian {
  std::size_t m = 0;
  Vec weights;              // size m+1, strictly positive
  double p = 2.0;
  double c_lo = 0.0;        // declared bounds on the weights
  double c_hi = 0.0;
  double time_slope = 0.0;  // weights scale by (1 + time_slope * t)

  double dz() const { return 1.0 / static_cast<double>(m + 1); }

  void validate() const {
    if (m == 0 || weights.size() != m + 1) throw InputError("WeightedPLaplacian: shape");
    if (p < 2.0) throw InputError("WeightedPLaplacian: p must satisfy 2 <= p");
    if (!(c_lo > 0.0)) throw InputError("WeightedPLaplacian: lower weight bound must be positive");
    if (time_slope < 0.0)
      throw InputError("WeightedPLaplacian: only nondecreasing time weights are supported");
    for (double w : weights)
      if (!(w >= c_lo && w <= c_hi))
        throw InputError("WeightedPLaplacian: weight outside declared bounds");
  }

  double time_factor(double t) const { return 1.0 + time_slope * t; }

  Vec apply(double t, const Vec& x) const {
    check_dim(x, m, "WeightedPLaplacian::apply");
    const double h = dz();
    const double tf = time_factor(t);
    Vec flux(m + 1);  // weighted flux on each edge
    for (std::size_t i = 0; i <= m; ++i) {
      const double left = (i == 0) ? 0.0 : x[i - 1];
      const double right = (i == m) ? 0.0 : x[i];
      flux[i] = tf * weights[i] * signed_power((right - left) / h, p);
    }
    Vec out(m);
    for (std::size_t j = 0; j < m; ++j) out[j] = (flux[j] - flux[j + 1]) / h;
    return out;
  }

  /// Solves x + h A(t,x) = y. Linear (tridiagonal) at p = 2, otherwise a
  /// damped Newton iteration on the strongly convex objective
  /// 0.5|x-y|^2 + h Psi(x).
  Vec resolvent(double t, double h, const Vec& y, double tol, int cap) const {
    check_dim(y, m, "WeightedPLaplacian::resolvent");
    const double dzv = dz();
    const double tf = time_factor(t);
    if (p == 2.0) {
      Vec diag(m), lowr(m > 1 ? m - 1 : 0), uppr(m > 1 ? m - 1 : 0);
      const double s = h * tf / (dzv * dzv);
      for (std::size_t j = 0; j < m; ++j) diag[j] = 1.0 + s * (weights[j] + weights[j + 1]);
      for (std::size_t j = 0; j + 1 < m; ++j) {
        lowr[j] = -s * weights[j + 1];
        uppr[j] = -s * weights[j + 1];
      }
      return solve_tridiag(lowr, diag, uppr, y);
    }

    auto energy = [&](const Vec& x) {
      double e = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double d = x[i] - y[i];
        e += 0.5 * d * d;
      }
      for (std::size_t i = 0; i <= m; ++i) {
        const double left = (i == 0) ? 0.0 : x[i - 1];
        const double right = (i == m) ? 0.0 : x[i];
        e += h * tf * weights[i] * std::pow(std::fabs((right - left) / dzv), p) / p;
      }
      return e;
    };

    Vec x = y;
    const double stop = std::fmin(tol, 1e-12 * (1.0 + norm2(y)));
    double res = 0.0;
    for (int it = 0; it < cap; ++it) {
      Vec grad = sub(add(apply_scaled(t, x, h), x), y);  // x + hA(x) - y
      res = norm2(grad);
      if (res <= stop) return x;
      // tridiagonal Hessian I + h (p-1) tf w_i |D_i|^(p-2) / dz^2
      Vec diag(m, 1.0), lowr(m > 1 ? m - 1 : 0, 0.0), uppr(m > 1 ? m - 1 : 0, 0.0);
      for (std::size_t i = 0; i <= m; ++i) {
        const double left = (i == 0) ? 0.0 : x[i - 1];
        const double right = (i == m) ? 0.0 : x[i];
        const double w = h * tf * weights[i] * (p - 1.0) *
                         std::pow(std::fabs((right - left) / dzv), p - 2.0) / (dzv * dzv);
        if (i > 0) diag[i - 1] += w;
        if (i < m) diag[i] += w;
        if (i > 0 && i < m) {
          lowr[i - 1] -= w;
          uppr[i - 1] -= w;
        }
      }
      Vec step = solve_tridiag(lowr, diag, uppr, grad);
      const double e0 = energy(x);
      const double gs = dot(grad, step);
      const double measurable = 32.0 * std::numeric_limits<double>::epsilon() * std::fabs(e0);
      if (1e-4 * gs <= measurable) {
        // decrement below energy rounding: the pure Newton step is safe here
        axpy(-1.0, step, x);
        continue;
      }
      double alpha = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 40; ++ls) {
        Vec cand = x;
        axpy(-alpha, step, cand);
        if (energy(cand) <= e0 - 1e-4 * alpha * gs) {
          x = std::move(cand);
          moved = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!moved) axpy(-1.0, step, x);
    }
    if (res > tol)
      throw NumericalError("WeightedPLaplacian::resolvent: Newton did not converge", res);
    return x;
  }

 private:
  Vec apply_scaled(double t, const Vec& x, double h) const {
    Vec v = apply(t, x);
    return scale(h, std::move(v));
  }
};

/// A (possibly multivalued) monotone operator with declared hypothesis
/// constants. Values are delivered as ConvexBody (a Point for single-valued
/// rules, a Box at the kinks of a piecewise-linear subdifferential), and the
/// resolvent (I + h A(t,.))^{-1} is the implicit-step primitive.
class MonotoneOp {
 public:
  enum class Kind { Zero, Linear, PwlProx, Power, PLaplacian };

  static MonotoneOp zero(std::size_t n) {
    MonotoneOp op;
    op.kind_ = Kind::Zero;
    op.dim_ = n;
    op.hyp_ = HypothesisConstants{TimeFn{0.0}, 0.0, 0.0, TimeFn{0.0}, 2.0};
    return op;
  }

  /// A(x) = M x with constants supplied by the caller.
  static MonotoneOp linear(std::size_t n, std::vector<double> matrix,
                           HypothesisConstants hyp) {
    if (matrix.size() != n * n) throw InputError("MonotoneOp::linear: matrix shape");
    MonotoneOp op;
    op.kind_ = Kind::Linear;
    op.dim_ = n;
    op.matrix_ = std::move(matrix);
    op.hyp_ = hyp;
    return op;
  }

  static MonotoneOp scalar_linear(std::size_t n, double gain) {
    HypothesisConstants hyp;
    hyp.c1 = gain;
    hyp.c2 = gain;
    hyp.p = 2.0;
    std::vector<double> mat(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) mat[i * n + i] = gain;
    return linear(n, std::move(mat), hyp);
  }

  /// Subdifferential of a separable convex piecewise-linear potential.
  static MonotoneOp pwl_prox(std::vector<PwlCoord> coords, HypothesisConstants hyp) {
    for (auto& c : coords) c.validate();
    MonotoneOp op;
    op.kind_ = Kind::PwlProx;
    op.dim_ = coords.size();
    op.pwl_ = std::move(coords);
    op.hyp_ = hyp;
    return op;
  }

  /// sign(x) in 1-d: the subdifferential of |.|.
  static MonotoneOp sign_1d() {
    HypothesisConstants hyp;
    hyp.a1 = TimeFn{1.0};
    hyp.c1 = 0.0;
    hyp.c2 = 1e-12;  // |x| is not coercive in the |x|^p sense; kept tiny
    hyp.a2 = TimeFn{1.0};
    hyp.p = 2.0;
    return pwl_prox({PwlCoord::abs_value()}, hyp);
  }

  /// Gradient of the smooth separable potential sum_i w_i |x_i - z_i|^q / q.
  static MonotoneOp power(Vec weights, Vec centers, double q, HypothesisConstants hyp) {
    if (weights.size() != centers.size()) throw InputError("MonotoneOp::power: shape");
    if (q < 2.0) throw InputError("MonotoneOp::power: q must satisfy 2 <= q");
    MonotoneOp op;
    op.kind_ = Kind::Power;
    op.dim_ = weights.size();
    op.pow_w_ = std::move(weights);
    op.pow_z_ = std::move(centers);
    op.pow_q_ = q;
    op.hyp_ = hyp;
    return op;
  }

  static MonotoneOp plaplacian(WeightedPLaplacian lap, double horizon = 1.0) {
    lap.validate();
    MonotoneOp op;
    op.kind_ = Kind::PLaplacian;
    op.dim_ = lap.m;
    op.hyp_ = plaplacian_constants(lap, horizon);
    op.lap_ = std::move(lap);
    return op;
  }

  /// Default declared constants for the discretization: at p = 2 the sharp
  /// coercivity constant c_lo * lambda_min of the scaled second-difference
  /// matrix, above 2 a cruder telescoping bound. The growth constant covers
  /// nondecreasing time weights up to the given horizon.
  static HypothesisConstants plaplacian_constants(const WeightedPLaplacian& lap,
                                                  double horizon = 1.0) {
    const double dzv = lap.dz();
    const double mm = static_cast<double>(lap.m);
    const double tf_hi = std::fmax(lap.time_factor(0.0), lap.time_factor(horizon));
    HypothesisConstants hyp;
    hyp.p = lap.p;
    hyp.a1 = TimeFn{0.0};
    hyp.c1 = lap.c_hi * tf_hi * std::pow(2.0 / dzv, lap.p) * std::sqrt(mm) / 2.0;
    hyp.a2 = TimeFn{0.0};
    if (lap.p == 2.0) {
      const double lam = 4.0 * std::pow(std::sin(M_PI * dzv / 2.0), 2) / (dzv * dzv);
      hyp.c2 = lap.c_lo * lam;
    } else {
      hyp.c2 = lap.c_lo /
               (std::pow(dzv, lap.p) * std::pow(mm, lap.p / 2.0) * std::pow(mm + 1.0, lap.p - 1.0));
    }
    return hyp;
  }

  Kind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  double p() const { return hyp_.p; }
  const HypothesisConstants& constants() const { return hyp_; }
  HypothesisConstants& constants() { return hyp_; }
  bool time_dependent() const {
    return kind_ == Kind::PLaplacian && lap_.time_slope != 0.0;
  }
  const WeightedPLaplacian& plap() const { return lap_; }

  /// The value set A(t,x).
  ConvexBody value(double t, const Vec& x) const {
    check_dim(x, dim_, "MonotoneOp::value");
    switch (kind_) {
      case Kind::Zero:
        return ConvexBody::point(zeros(dim_));
      case Kind::Linear: {
        Vec v(dim_, 0.0);
        for (std::size_t r = 0; r < dim_; ++r)
          for (std::size_t c = 0; c < dim_; ++c) v[r] += matrix_[r * dim_ + c] * x[c];
        return ConvexBody::point(std::move(v));
      }
      case Kind::PwlProx: {
        Vec lo(dim_), hi(dim_);
        bool kink = false;
        for (std::size_t i = 0; i < dim_; ++i) {
          auto [l, h] = pwl_[i].subgradient(x[i], kink_tol_);
          lo[i] = l;
          hi[i] = h;
          kink = kink || (l != h);
        }
        if (!kink) return ConvexBody::point(std::move(lo));
        return ConvexBody::box(std::move(lo), std::move(hi));
      }
      case Kind::Power: {
        Vec v(dim_);
        for (std::size_t i = 0; i < dim_; ++i)
          v[i] = pow_w_[i] * signed_power(x[i] - pow_z_[i], pow_q_);
        return ConvexBody::point(std::move(v));
      }
      case Kind::PLaplacian:
        return ConvexBody::point(lap_.apply(t, x));
    }
    return ConvexBody::point(zeros(dim_));
  }

  /// Solves x + h A(t,x) ∋ y to residual tol; unique by monotonicity.
  Vec resolvent(double t, double h, const Vec& y, double tol = 1e-10, int cap = 200) const {
    check_dim(y, dim_, "MonotoneOp::resolvent");
    if (!(h > 0.0)) throw InputError("MonotoneOp::resolvent: h must be positive");
    if (!(tol > 0.0)) throw InputError("MonotoneOp::resolvent: tol must be positive");
    switch (kind_) {
      case Kind::Zero:
        return y;
      case Kind::Linear: {
        std::vector<double> A(dim_ * dim_);
        for (std::size_t i = 0; i < dim_ * dim_; ++i) A[i] = h * matrix_[i];
        for (std::size_t i = 0; i < dim_; ++i) A[i * dim_ + i] += 1.0;
        return solve_dense(std::move(A), y);
      }
      case Kind::PwlProx: {
        Vec x(dim_);
        for (std::size_t i = 0; i < dim_; ++i) x[i] = pwl_[i].prox(h, y[i]);
        return x;
      }
      case Kind::Power: {
        Vec x(dim_);
        for (std::size_t i = 0; i < dim_; ++i)
          x[i] = prox_power_1d(pow_w_[i], pow_z_[i], pow_q_, h, y[i], tol, cap);
        return x;
      }
      case Kind::PLaplacian:
        return lap_.resolvent(t, h, y, tol, cap);
    }
    return y;
  }

 private:
  // solve x + h w |x-z|^(q-2)(x-z) = y: safeguarded Newton on a monotone scalar map
  static double prox_power_1d(double w, double z, double q, double h, double y,
                              double tol, int cap) {
    auto f = [&](double x) { return x + h * w * signed_power(x - z, q) - y; };
    double lo = std::fmin(y, z), hi = std::fmax(y, z);  // root lies between y and z or at y
    if (f(lo) > 0.0) lo = y - std::fabs(y - z) - 1.0;
    if (f(hi) < 0.0) hi = y + std::fabs(y - z) + 1.0;
    while (f(lo) > 0.0) lo -= std::fmax(1.0, std::fabs(lo));
    while (f(hi) < 0.0) hi += std::fmax(1.0, std::fabs(hi));
    double x = 0.5 * (lo + hi);
    const double stop = std::fmin(tol, 1e-14 * (1.0 + std::fabs(y)));
    for (int it = 0; it < cap; ++it) {
      const double fx = f(x);
      if (std::fabs(fx) <= stop) return x;
      if (fx > 0.0) hi = x; else lo = x;
      const double d = 1.0 + h * w * (q - 1.0) * std::pow(std::fabs(x - z), q - 2.0);
      double next = x - fx / d;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      x = next;
    }
    if (std::fabs(f(x)) > tol)
      throw NumericalError("MonotoneOp: power prox did not converge", std::fabs(f(x)));
    return x;
  }

  Kind kind_ = Kind::Zero;
  std::size_t dim_ = 0;
  HypothesisConstants hyp_;
  std::vector<double> matrix_;
  std::vector<PwlCoord> pwl_;
  Vec pow_w_, pow_z_;
  double pow_q_ = 2.0;
  WeightedPLaplacian lap_;
  double kink_tol_ = 1e-12;
};

/// Result of the Monte-Carlo hypothesis check. Margins are the worst
/// observed slack of each inequality; PASS requires all >= -1e-8.
struct HypothesisReport {
  bool rejected = false;        // structurally invalid declared constants
  std::string reject_reason;
  double monotonicity_margin = std::numeric_limits<double>::infinity();
  double growth_margin = std::numeric_limits<double>::infinity();
  double coercivity_margin = std::numeric_limits<double>::infinity();
  int samples = 0;
  bool pass = false;

  static constexpr double kMarginTol = -1e-8;
};

inline HypothesisReport validate_hypotheses(const MonotoneOp& A, int sample_budget,
                                            double horizon = 1.0,
                                            std::uint64_t seed = 0x9d2c5680u) {
  if (sample_budget < 1) throw InputError("validate_hypotheses: sample_budget >= 1");
  HypothesisReport rep;
  const auto& c = A.constants();
  if (!(c.c2 > 0.0)) {
    rep.rejected = true;
    rep.reject_reason = "coercivity constant c2 must be positive";
    return rep;
  }
  if (c.p < 2.0) {
    rep.rejected = true;
    rep.reject_reason = "exponent p must satisfy 2 <= p";
    return rep;
  }
  Rng rng(seed);
  const double radii[] = {0.5, 1.0, 2.0, 4.0};
  for (int s = 0; s < sample_budget; ++s) {
    const double t = A.time_dependent() ? rng.uniform(0.0, horizon) : 0.0;
    const Vec x = rng.ball_vec(A.dim(), radii[s % 4]);
    const Vec y = rng.ball_vec(A.dim(), radii[(s + 1) % 4]);
    const ConvexBody vx = A.value(t, x);
    const ConvexBody vy = A.value(t, y);

    // monotonicity holds for every pair of elements; test a random one
    const Vec hx = sample_element(vx, rng);
    const Vec hy = sample_element(vy, rng);
    rep.monotonicity_margin =
        std::fmin(rep.monotonicity_margin, dot(sub(hx, hy), sub(x, y)));

    const double nx = norm2(x);
    rep.growth_margin = std::fmin(
        rep.growth_margin, c.a1(t) + c.c1 * std::pow(nx, c.p - 1.0) - magnitude(vx));

    // inf over the value set of <h,x> = -support(-x, set)
    const double inner = -support(scale(-1.0, x), vx);
    rep.coercivity_margin =
        std::fmin(rep.coercivity_margin, inner - c.c2 * std::pow(nx, c.p) + c.a2(t));
    ++rep.samples;
  }
  rep.pass = rep.monotonicity_margin >= HypothesisReport::kMarginTol &&
             rep.growth_margin >= HypothesisReport::kMarginTol &&
             rep.coercivity_margin >= HypothesisReport::kMarginTol;
  return rep;
}

}  // namespace evinc
