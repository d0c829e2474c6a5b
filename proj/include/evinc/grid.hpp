#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "evinc/errors.hpp"
#include "evinc/vec.hpp"

namespace evinc {

/// Strictly increasing node times 0 = t_0 < ... < t_N = b.
class TimeGrid {
 public:
  static TimeGrid uniform(double b, std::size_t steps) {
    if (!(b > 0.0) || steps == 0) throw InputError("TimeGrid::uniform: bad arguments");
    Vec t(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k)
      t[k] = b * static_cast<double>(k) / static_cast<double>(steps);
    t.back() = b;
    return TimeGrid(std::move(t));
  }

  explicit TimeGrid(Vec nodes) : t_(std::move(nodes)) {
    if (t_.size() < 2) throw InputError("TimeGrid: need at least two nodes");
    if (t_.front() != 0.0) throw InputError("TimeGrid: t_0 must be 0");
    for (std::size_t k = 1; k < t_.size(); ++k)
      if (!(t_[k] > t_[k - 1])) throw InputError("TimeGrid: nodes not increasing");
  }

  double horizon() const { return t_.back(); }
  std::size_t nodes() const { return t_.size(); }
  std::size_t steps() const { return t_.size() - 1; }
  double t(std::size_t k) const { return t_[k]; }
  double dt(std::size_t k) const { return t_[k + 1] - t_[k]; }
  const Vec& node_times() const { return t_; }

  std::size_t nearest_index(double time) const {
    std::size_t lo = 0, hi = t_.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (t_[mid] < time) lo = mid + 1; else hi = mid;
    }
    if (lo > 0 && std::fabs(t_[lo - 1] - time) < std::fabs(t_[lo] - time)) --lo;
    return lo;
  }

  TimeGrid refined() const {  // halve every step
    Vec t(2 * steps() + 1);
    for (std::size_t k = 0; k < steps(); ++k) {
      t[2 * k] = t_[k];
      t[2 * k + 1] = 0.5 * (t_[k] + t_[k + 1]);
    }
    t.back() = t_.back();
    return TimeGrid(std::move(t));
  }

  bool operator==(const TimeGrid& o) const { return t_ == o.t_; }

 private:
  Vec t_;
};

/// A grid function: one state vector per node. Discrete stand-in for an
/// absolutely continuous path on [0, b].
struct Trajectory {
  TimeGrid grid;
  std::vector<Vec> states;  // size grid.nodes()

  Trajectory(TimeGrid g, std::vector<Vec> s) : grid(std::move(g)), states(std::move(s)) {
    if (states.size() != grid.nodes())
      throw InputError("Trajectory: states count must match node count");
    for (const Vec& x : states)
      if (x.size() != states.front().size())
        throw InputError("Trajectory: inconsistent state dimensions");
  }

  std::size_t dim() const { return states.front().size(); }

  Vec velocity(std::size_t k) const {  // forward difference on step k
    Vec v = sub(states[k + 1], states[k]);
    return scale(1.0 / grid.dt(k), std::move(v));
  }

  double sup_gap(const Trajectory& o) const {
    double m = 0.0;
    for (std::size_t k = 0; k < states.size(); ++k)
      m = std::fmax(m, dist2(states[k], o.states[k]));
    return m;
  }
};

/// Composite-trapezoid L^p(0,b) norm of t -> |x(t)| together with the
/// max-over-nodes sup norm.
inline std::pair<double, double> trajectory_norms(const Trajectory& x, double p) {
  if (!(p >= 1.0)) throw InputError("trajectory_norms: p >= 1 required");
  double sup = 0.0, integral = 0.0;
  const std::size_t n = x.states.size();
  Vec mags(n);
  for (std::size_t k = 0; k < n; ++k) {
    mags[k] = norm2(x.states[k]);
    sup = std::fmax(sup, mags[k]);
  }
  for (std::size_t k = 0; k + 1 < n; ++k)
    integral += 0.5 * x.grid.dt(k) * (std::pow(mags[k], p) + std::pow(mags[k + 1], p));
  return {std::pow(integral, 1.0 / p), sup};
}

/// L^q(0,b) norm of the forward-difference velocity (piecewise constant on
/// the steps). Together with trajectory_norms this is the discrete
/// surrogate of the solution-space norm |x|_{L^p} + |x'|_{L^q}.
inline double velocity_lq_norm(const Trajectory& x, double q) {
  if (!(q >= 1.0)) throw InputError("velocity_lq_norm: q >= 1 required");
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < x.grid.nodes(); ++k)
    s += x.grid.dt(k) * std::pow(norm2(x.velocity(k)), q);
  return std::pow(s, 1.0 / q);
}

/// Trapezoid L^1(0,b) norm of the nodewise gap between two grid functions
/// given as per-node vectors.
inline double l1_gap(const TimeGrid& g, const std::vector<Vec>& a, const std::vector<Vec>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < g.nodes(); ++k)
    s += 0.5 * g.dt(k) * (dist2(a[k], b[k]) + dist2(a[k + 1], b[k + 1]));
  return s;
}

}  // namespace evinc
