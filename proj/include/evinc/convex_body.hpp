#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "evinc/errors.hpp"
#include "evinc/rng.hpp"
#include "evinc/vec.hpp"

namespace evinc {

/// A nonempty compact convex set in R^n: a single point, an axis-aligned box,
/// or a Euclidean ball. These are the value sets of every multifunction in
/// the toolkit; keeping the class this small makes distances, projections,
/// support functions and the Hausdorff metric available in closed form.
class ConvexBody {
 public:
  enum class Kind { Point, Box, Ball };

  static ConvexBody point(Vec x) {
    ConvexBody c;
    c.kind_ = Kind::Point;
    c.a_ = std::move(x);
    return c;
  }

  static ConvexBody box(Vec lo, Vec hi) {
    if (lo.size() != hi.size()) throw InputError("ConvexBody::box: lo/hi dimension mismatch");
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (lo[i] > hi[i]) throw InputError("ConvexBody::box: lo > hi");
    ConvexBody c;
    c.kind_ = Kind::Box;
    c.a_ = std::move(lo);
    c.b_ = std::move(hi);
    return c;
  }

  static ConvexBody ball(Vec center, double radius) {
    if (radius < 0.0) throw InputError("ConvexBody::ball: negative radius");
    ConvexBody c;
    c.kind_ = Kind::Ball;
    c.a_ = std::move(center);
    c.radius_ = radius;
    return c;
  }

  /// 1-d interval [lo, hi].
  static ConvexBody interval(double lo, double hi) { return box({lo}, {hi}); }

  Kind kind() const { return kind_; }
  std::size_t dim() const { return a_.size(); }

  const Vec& point_value() const { return a_; }
  const Vec& lo() const { return a_; }
  const Vec& hi() const { return b_; }
  const Vec& center() const { return a_; }
  double radius() const { return radius_; }

  ConvexBody translated(const Vec& shift) const {
    check_dim(shift, dim(), "ConvexBody::translated");
    ConvexBody c = *this;
    c.a_ = add(c.a_, shift);
    if (kind_ == Kind::Box) c.b_ = add(c.b_, shift);
    return c;
  }

  bool same_representation(const ConvexBody& o, double tol) const {
    if (kind_ != o.kind_ || dim() != o.dim()) return false;
    for (std::size_t i = 0; i < a_.size(); ++i)
      if (std::fabs(a_[i] - o.a_[i]) > tol) return false;
    if (kind_ == Kind::Box)
      for (std::size_t i = 0; i < b_.size(); ++i)
        if (std::fabs(b_[i] - o.b_[i]) > tol) return false;
    if (kind_ == Kind::Ball && std::fabs(radius_ - o.radius_) > tol) return false;
    return true;
  }

 private:
  Kind kind_ = Kind::Point;
  Vec a_;          // point / box lo / ball center
  Vec b_;          // box hi
  double radius_ = 0.0;
};

/// inf over v in C of |y - v|.
inline double distance(const Vec& y, const ConvexBody& C) {
  check_dim(y, C.dim(), "distance");
  switch (C.kind()) {
    case ConvexBody::Kind::Point:
      return dist2(y, C.point_value());
    case ConvexBody::Kind::Box: {
      double s = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = std::fmax(C.lo()[i] - y[i], std::fmax(0.0, y[i] - C.hi()[i]));
        s += d * d;
      }
      return std::sqrt(s);
    }
    case ConvexBody::Kind::Ball:
      return std::fmax(0.0, dist2(y, C.center()) - C.radius());
  }
  return 0.0;
}

/// Nearest point of C to y (unique since C is convex).
inline Vec project(const Vec& y, const ConvexBody& C) {
  check_dim(y, C.dim(), "project");
  switch (C.kind()) {
    case ConvexBody::Kind::Point:
      return C.point_value();
    case ConvexBody::Kind::Box: {
      Vec p(y.size());
      for (std::size_t i = 0; i < y.size(); ++i)
        p[i] = std::clamp(y[i], C.lo()[i], C.hi()[i]);
      return p;
    }
    case ConvexBody::Kind::Ball: {
      const double d = dist2(y, C.center());
      if (d <= C.radius()) return y;
      Vec p = C.center();
      axpy(C.radius() / d, sub(y, C.center()), p);
      return p;
    }
  }
  return y;
}

inline bool contains(const ConvexBody& C, const Vec& y, double tol = 0.0) {
  return distance(y, C) <= tol;
}

/// Support function: sup over c in C of <v, c>.
inline double support(const Vec& v, const ConvexBody& C) {
  check_dim(v, C.dim(), "support");
  switch (C.kind()) {
    case ConvexBody::Kind::Point:
      return dot(v, C.point_value());
    case ConvexBody::Kind::Box: {
      double s = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i)
        s += std::fmax(v[i] * C.lo()[i], v[i] * C.hi()[i]);
      return s;
    }
    case ConvexBody::Kind::Ball:
      return dot(v, C.center()) + C.radius() * norm2(v);
  }
  return 0.0;
}

/// sup over c in C of |y - c| (attained at an extreme point).
inline double farthest_distance(const Vec& y, const ConvexBody& C) {
  check_dim(y, C.dim(), "farthest_distance");
  switch (C.kind()) {
    case ConvexBody::Kind::Point:
      return dist2(y, C.point_value());
    case ConvexBody::Kind::Box: {
      double s = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = std::fmax(std::fabs(y[i] - C.lo()[i]), std::fabs(y[i] - C.hi()[i]));
        s += d * d;
      }
      return std::sqrt(s);
    }
    case ConvexBody::Kind::Ball:
      return dist2(y, C.center()) + C.radius();
  }
  return 0.0;
}

/// sup over c in C of |c| (the |D| of the growth bounds).
inline double magnitude(const ConvexBody& C) {
  return farthest_distance(zeros(C.dim()), C);
}

/// Deterministic direction set on the unit sphere of R^n: endpoints in 1-d,
/// uniform angles in 2-d, a Fibonacci lattice in 3-d, fixed-seed samples
/// beyond. Feeds hormander_estimate.
inline std::vector<Vec> sphere_directions(std::size_t n, std::size_t count) {
  std::vector<Vec> dirs;
  if (n == 1) {
    dirs.push_back({1.0});
    dirs.push_back({-1.0});
    return dirs;
  }
  dirs.reserve(count);
  if (n == 2) {
    for (std::size_t k = 0; k < count; ++k) {
      const double th = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(count);
      dirs.push_back({std::cos(th), std::sin(th)});
    }
  } else if (n == 3) {
    // Fibonacci sphere
    const double ga = M_PI * (3.0 - std::sqrt(5.0));
    for (std::size_t k = 0; k < count; ++k) {
      const double z = 1.0 - 2.0 * (static_cast<double>(k) + 0.5) / static_cast<double>(count);
      const double r = std::sqrt(std::fmax(0.0, 1.0 - z * z));
      const double th = ga * static_cast<double>(k);
      dirs.push_back({r * std::cos(th), r * std::sin(th), z});
    }
  } else {
    Rng rng(0x5bd1e995u);  // fixed seed: the direction set is part of the algorithm
    for (std::size_t k = 0; k < count; ++k) dirs.push_back(rng.unit_vec(n));
  }
  return dirs;
}

namespace detail {

inline void enumerate_vertices(const ConvexBody& box, std::size_t dim_cap,
                               std::vector<Vec>& out) {
  const std::size_t n = box.dim();
  if (n > dim_cap)
    throw CapacityError("hausdorff: box vertex enumeration refused above dimension " +
                        std::to_string(dim_cap) + "; use hormander_estimate");
  out.clear();
  const std::size_t count = std::size_t{1} << n;
  out.reserve(count);
  for (std::size_t mask = 0; mask < count; ++mask) {
    Vec v(n);
    for (std::size_t i = 0; i < n; ++i)
      v[i] = (mask >> i) & 1 ? box.hi()[i] : box.lo()[i];
    out.push_back(std::move(v));
  }
}

/// max over the sphere of x -> distance(x, other), for x on the boundary of
/// the ball. Candidate scan plus a short projected ascent; the objective is
/// convex, so its maximum over the ball lies on the sphere.
inline double ball_side_sup(const ConvexBody& ball, const ConvexBody& other,
                            std::size_t samples) {
  const std::size_t n = ball.dim();
  const Vec& c = ball.center();
  const double r = ball.radius();
  if (r == 0.0) return distance(c, other);

  std::vector<Vec> dirs = sphere_directions(n, samples);
  // closed-form candidates: away from the other body's extreme points
  std::vector<Vec> anchors;
  if (other.kind() == ConvexBody::Kind::Box) {
    if (other.dim() <= 12) enumerate_vertices(other, 12, anchors);
  } else if (other.kind() == ConvexBody::Kind::Point) {
    anchors.push_back(other.point_value());
  } else {
    anchors.push_back(other.center());
  }
  anchors.push_back(project(c, other));
  for (const Vec& a : anchors) {
    Vec d = sub(c, a);
    const double nd = norm2(d);
    if (nd > 1e-14) dirs.push_back(scale(1.0 / nd, std::move(d)));
  }

  double best = 0.0;
  Vec best_x;
  for (const Vec& u : dirs) {
    Vec x = c;
    axpy(r, u, x);
    const double v = distance(x, other);
    if (v > best) {
      best = v;
      best_x = x;
    }
  }
  if (best_x.empty()) return best;

  // local refinement: gradient of distance is (x - proj)/distance where it is positive
  Vec x = best_x;
  for (int it = 0; it < 60; ++it) {
    const double d = distance(x, other);
    if (d <= 0.0) break;
    Vec g = sub(x, project(x, other));
    Vec y = x;
    axpy(r / static_cast<double>(it + 4) / std::fmax(d, 1e-300), g, y);
    // retract to the sphere
    Vec dir = sub(y, c);
    const double nd = norm2(dir);
    if (nd < 1e-300) break;
    Vec cand = c;
    axpy(r / nd, dir, cand);
    const double v = distance(cand, other);
    if (v > best) {
      best = v;
      x = cand;
    } else {
      break;
    }
  }
  return best;
}

}  // namespace detail

struct HausdorffOptions {
  std::size_t dim_cap = 12;          // box vertex enumeration limit
  std::size_t ball_samples = 2000;   // sphere sampling for box/ball pairs
};

/// Hausdorff distance, exact for point/point, point/box, point/ball,
/// box/box and ball/ball pairs. For mixed box/ball pairs the box side is
/// exact (vertex maximization of a convex function) and the ball side is a
/// refined sphere search, accurate to about 1e-3 or better.
inline double hausdorff(const ConvexBody& C1, const ConvexBody& C2,
                        const HausdorffOptions& opt = {}) {
  if (C1.dim() != C2.dim()) throw InputError("hausdorff: dimension mismatch");
  using K = ConvexBody::Kind;
  const K k1 = C1.kind(), k2 = C2.kind();

  if (k1 == K::Point) return farthest_distance(C1.point_value(), C2);
  if (k2 == K::Point) return farthest_distance(C2.point_value(), C1);

  if (k1 == K::Ball && k2 == K::Ball)
    return dist2(C1.center(), C2.center()) + std::fabs(C1.radius() - C2.radius());

  auto box_side = [&](const ConvexBody& box, const ConvexBody& other) {
    std::vector<Vec> verts;
    detail::enumerate_vertices(box, opt.dim_cap, verts);
    double m = 0.0;
    for (const Vec& v : verts) m = std::fmax(m, distance(v, other));
    return m;
  };

  if (k1 == K::Box && k2 == K::Box)
    return std::fmax(box_side(C1, C2), box_side(C2, C1));

  const ConvexBody& box = (k1 == K::Box) ? C1 : C2;
  const ConvexBody& ball = (k1 == K::Box) ? C2 : C1;
  return std::fmax(box_side(box, ball),
                   detail::ball_side_sup(ball, box, opt.ball_samples));
}

/// Support-gap estimate of the Hausdorff distance over the supplied unit
/// directions: a lower bound, exact in the limit of dense directions.
inline double hormander_estimate(const ConvexBody& C1, const ConvexBody& C2,
                                 const std::vector<Vec>& directions) {
  if (C1.dim() != C2.dim()) throw InputError("hormander_estimate: dimension mismatch");
  if (directions.empty()) throw InputError("hormander_estimate: empty direction list");
  double m = 0.0;
  for (const Vec& v : directions) {
    if (std::fabs(norm2(v) - 1.0) > 1e-12)
      throw InputError("hormander_estimate: direction not unit-norm");
    m = std::fmax(m, std::fabs(support(v, C1) - support(v, C2)));
  }
  return m;
}

/// A random member of C, uniform per kind.
inline Vec sample_element(const ConvexBody& C, Rng& rng) {
  switch (C.kind()) {
    case ConvexBody::Kind::Point:
      return C.point_value();
    case ConvexBody::Kind::Box: {
      Vec v(C.dim());
      for (std::size_t i = 0; i < C.dim(); ++i) v[i] = rng.uniform(C.lo()[i], C.hi()[i]);
      return v;
    }
    case ConvexBody::Kind::Ball: {
      Vec v = C.center();
      Vec d = rng.ball_vec(C.dim(), C.radius());
      return add(std::move(v), d);
    }
  }
  return C.point_value();
}

/// distance(y, C1 + C2) where + is the Minkowski sum. Every pair of
/// supported kinds reduces: points translate, a ball contributes a radius
/// deduction, two boxes add componentwise.
inline double distance_to_sum(const Vec& y, const ConvexBody& C1, const ConvexBody& C2) {
  if (C1.dim() != C2.dim() || y.size() != C1.dim())
    throw InputError("distance_to_sum: dimension mismatch");
  using K = ConvexBody::Kind;
  if (C1.kind() == K::Point) return distance(sub(y, C1.point_value()), C2);
  if (C2.kind() == K::Point) return distance(sub(y, C2.point_value()), C1);
  if (C1.kind() == K::Ball)
    return std::fmax(0.0, distance(sub(y, C1.center()), C2) - C1.radius());
  if (C2.kind() == K::Ball)
    return std::fmax(0.0, distance(sub(y, C2.center()), C1) - C2.radius());
  // box + box
  return distance(y, ConvexBody::box(add(C1.lo(), C2.lo()), add(C1.hi(), C2.hi())));
}

}  // namespace evinc
