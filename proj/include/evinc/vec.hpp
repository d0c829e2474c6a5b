#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "evinc/errors.hpp"

namespace evinc {

using Vec = std::vector<double>;

inline void check_dim(const Vec& a, std::size_t n, const char* where) {
  if (a.size() != n) throw InputError(std::string(where) + ": dimension mismatch");
}

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double dist2(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline Vec add(Vec a, const Vec& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

inline Vec sub(Vec a, const Vec& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
  return a;
}

inline Vec scale(double c, Vec a) {
  for (double& x : a) x *= c;
  return a;
}

// a += c*b
inline void axpy(double c, const Vec& b, Vec& a) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += c * b[i];
}

inline Vec zeros(std::size_t n) { return Vec(n, 0.0); }

/// Solves A x = rhs by Gaussian elimination with partial pivoting.
/// A is row-major n*n; both arguments are copied.
inline Vec solve_dense(std::vector<double> A, Vec rhs) {
  const std::size_t n = rhs.size();
  if (A.size() != n * n) throw InputError("solve_dense: shape mismatch");
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(A[r * n + col]) > std::fabs(A[piv * n + col])) piv = r;
    if (std::fabs(A[piv * n + col]) < 1e-300)
      throw NumericalError("solve_dense: singular matrix", A[piv * n + col]);
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(A[piv * n + c], A[col * n + c]);
      std::swap(rhs[piv], rhs[col]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = A[r * n + col] / A[col * n + col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) A[r * n + c] -= f * A[col * n + c];
      rhs[r] -= f * rhs[col];
    }
  }
  Vec x(n, 0.0);
  for (std::size_t ri = n; ri-- > 0;) {
    double s = rhs[ri];
    for (std::size_t c = ri + 1; c < n; ++c) s -= A[ri * n + c] * x[c];
    x[ri] = s / A[ri * n + ri];
  }
  return x;
}

/// Solves a tridiagonal system (Thomas algorithm).
/// lower/upper have size n-1, diag has size n.
inline Vec solve_tridiag(Vec lower, Vec diag, Vec upper, Vec rhs) {
  const std::size_t n = rhs.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double w = lower[i - 1] / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  Vec x(n, 0.0);
  x[n - 1] = rhs[n - 1] / diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = (rhs[i] - upper[i] * x[i + 1]) / diag[i];
  return x;
}

}  // namespace evinc
