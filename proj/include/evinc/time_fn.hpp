#pragma once

#include <cmath>

#include "evinc/errors.hpp"

namespace evinc {

/// Scalar function of time of the form c0 + c1*t. Closed-form integrals keep
/// the certificate arithmetic exact. Values are expected to stay nonnegative
/// on the horizon where the function is used as a modulus or bound.
struct TimeFn {
  double c0 = 0.0;
  double c1 = 0.0;

  constexpr TimeFn() = default;
  constexpr TimeFn(double constant) : c0(constant) {}  // NOLINT(google-explicit-constructor)
  constexpr TimeFn(double c0, double c1) : c0(c0), c1(c1) {}

  double operator()(double t) const { return c0 + c1 * t; }

  /// Integral over [0, t].
  double integral(double t) const { return c0 * t + 0.5 * c1 * t * t; }

  bool is_zero() const { return c0 == 0.0 && c1 == 0.0; }

  /// L1 norm on [0, b]; requires the function to be nonnegative there.
  double l1(double b) const {
    if ((*this)(0.0) < 0.0 || (*this)(b) < 0.0)
      throw InputError("TimeFn::l1: function negative on horizon");
    return integral(b);
  }

  /// L2 norm on [0, b].
  double l2(double b) const {
    // integral of (c0 + c1 t)^2 = c0^2 b + c0 c1 b^2 + c1^2 b^3 / 3
    const double v = c0 * c0 * b + c0 * c1 * b * b + c1 * c1 * b * b * b / 3.0;
    return std::sqrt(v);
  }

  double max_on(double b) const { return std::fmax((*this)(0.0), (*this)(b)); }
};

}  // namespace evinc
