#pragma once

#include <cstdint>
#include <random>

#include "evinc/vec.hpp"

namespace evinc {

/// splitmix64 step; used to derive independent per-task seeds so that results
/// do not depend on scheduling order.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(eng_);
  }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng_); }
  int uniform_int(int lo, int hi) {  // inclusive
    return std::uniform_int_distribution<int>(lo, hi)(eng_);
  }

  Vec uniform_vec(std::size_t n, double lo, double hi) {
    Vec v(n);
    for (double& x : v) x = uniform(lo, hi);
    return v;
  }

  /// Uniform point on the unit sphere in R^n.
  Vec unit_vec(std::size_t n) {
    Vec v(n);
    double s = 0.0;
    do {
      for (double& x : v) x = normal();
      s = norm2(v);
    } while (s < 1e-12);
    return scale(1.0 / s, std::move(v));
  }

  /// Uniform point in the closed ball of given radius.
  Vec ball_vec(std::size_t n, double radius) {
    Vec v = unit_vec(n);
    const double r = radius * std::pow(uniform(0.0, 1.0), 1.0 / static_cast<double>(n));
    return scale(r, std::move(v));
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace evinc
