#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <utility>

#include "evinc/convex_body.hpp"
#include "evinc/rng.hpp"
#include "evinc/time_fn.hpp"
#include "evinc/vec.hpp"

namespace evinc {

/// Parameter-to-parameter continuity data of a multifunction family:
/// h(F(t,x,l), F(t,x,l')) <= beta(d(l,l')) * w(t,|x|) with a linear modulus
/// beta(r) = beta_coef * r and weight w(t,r) = w0 * (1 + r).
struct ParamModulus {
  double beta_coef = 0.0;
  double w0 = 1.0;
  double beta(double r) const { return beta_coef * r; }
  double weight(double /*t*/, double r) const { return w0 * (1.0 + r); }
};

/// The perturbation multifunction F(t, x, lambda) of the inclusion, carried
/// as an arbitrary rule plus its declared hypothesis data: Lipschitz modulus
/// k(t) in x, growth |F| <= a3(t) + c3 |x|, and the parameter modulus.
class MultiMap {
 public:
  using Rule = std::function<ConvexBody(double t, const Vec& x, double lambda)>;

  MultiMap() = default;
  MultiMap(Rule rule, TimeFn k, TimeFn a3, double c3, ParamModulus pm = {})
      : rule_(std::move(rule)), k_(k), a3_(a3), c3_(c3), pm_(pm) {}

  ConvexBody operator()(double t, const Vec& x, double lambda) const {
    return rule_(t, x, lambda);
  }

  const TimeFn& lipschitz() const { return k_; }
  const TimeFn& a3() const { return a3_; }
  double c3() const { return c3_; }
  const ParamModulus& param_modulus() const { return pm_; }
  double tau(double t) const { return k_.integral(t); }  // int_0^t k

  /// F == {0}: no perturbation.
  static MultiMap singleton_zero(std::size_t n) {
    return MultiMap(
        [n](double, const Vec&, double) { return ConvexBody::point(zeros(n)); },
        TimeFn{0.0}, TimeFn{0.0}, 0.0);
  }

  /// Constant box, independent of (t, x, lambda).
  static MultiMap constant_box(Vec lo, Vec hi) {
    const double mag = magnitude(ConvexBody::box(lo, hi));
    ConvexBody body = ConvexBody::box(std::move(lo), std::move(hi));
    return MultiMap([body](double, const Vec&, double) { return body; },
                    TimeFn{0.0}, TimeFn{mag}, 0.0);
  }

  /// Tube around a scaled state: Box [alpha x + shift - hw, alpha x + shift + hw],
  /// optionally with lambda-affine halfwidth hw + hw_l * lambda. The declared
  /// growth bound assumes |lambda| <= lambda_mag.
  static MultiMap tube(double alpha, Vec shift, Vec halfwidth, double hw_lambda = 0.0,
                       double lambda_mag = 1.0) {
    const std::size_t n = shift.size();
    const double sq_n = std::sqrt(static_cast<double>(n));
    const double base =
        norm2(shift) + norm2(halfwidth) + std::fabs(hw_lambda) * lambda_mag * sq_n;
    MultiMap f(
        [alpha, shift, halfwidth, hw_lambda, n](double, const Vec& x, double lambda) {
          Vec lo(n), hi(n);
          for (std::size_t i = 0; i < n; ++i) {
            const double c = alpha * x[i] + shift[i];
            const double hw = std::fmax(0.0, halfwidth[i] + hw_lambda * lambda);
            lo[i] = c - hw;
            hi[i] = c + hw;
          }
          return ConvexBody::box(std::move(lo), std::move(hi));
        },
        TimeFn{std::fabs(alpha)}, TimeFn{base}, std::fabs(alpha),
        ParamModulus{std::fabs(hw_lambda) * sq_n, 1.0});
    return f;
  }

  /// Ball of fixed radius around a scaled state.
  static MultiMap state_ball(double alpha, double radius) {
    return MultiMap(
        [alpha, radius](double, const Vec& x, double) {
          return ConvexBody::ball(scale(alpha, x), radius);
        },
        TimeFn{std::fabs(alpha)}, TimeFn{radius}, std::fabs(alpha));
  }

 private:
  Rule rule_;
  TimeFn k_{0.0};
  TimeFn a3_{0.0};
  double c3_ = 0.0;
  ParamModulus pm_;
};

/// Monte-Carlo check of the declared moduli of a MultiMap on random samples;
/// margins must be >= -1e-8 to pass, mirroring the operator-side report.
struct MultiMapReport {
  double lipschitz_margin = std::numeric_limits<double>::infinity();
  double growth_margin = std::numeric_limits<double>::infinity();
  double param_margin = std::numeric_limits<double>::infinity();
  bool pass = false;
};

inline MultiMapReport validate_multimap(const MultiMap& F, std::size_t dim, int samples,
                                        double horizon, double lambda_lo, double lambda_hi,
                                        std::uint64_t seed = 0x2545f491u) {
  MultiMapReport rep;
  Rng rng(seed);
  for (int s = 0; s < samples; ++s) {
    const double t = rng.uniform(0.0, horizon);
    const double l = rng.uniform(lambda_lo, lambda_hi);
    const double l2 = rng.uniform(lambda_lo, lambda_hi);
    const Vec x = rng.ball_vec(dim, 4.0);
    const Vec y = rng.ball_vec(dim, 4.0);
    const ConvexBody fx = F(t, x, l);
    const ConvexBody fy = F(t, y, l);
    rep.lipschitz_margin = std::fmin(
        rep.lipschitz_margin, F.lipschitz()(t) * dist2(x, y) - hausdorff(fx, fy));
    rep.growth_margin = std::fmin(
        rep.growth_margin, F.a3()(t) + F.c3() * norm2(x) - magnitude(fx));
    const ConvexBody fxl2 = F(t, x, l2);
    rep.param_margin = std::fmin(
        rep.param_margin,
        F.param_modulus().beta(std::fabs(l - l2)) * F.param_modulus().weight(t, norm2(x)) -
            hausdorff(fx, fxl2));
  }
  rep.pass = rep.lipschitz_margin >= -1e-8 && rep.growth_margin >= -1e-8 &&
             rep.param_margin >= -1e-8;
  return rep;
}

}  // namespace evinc
