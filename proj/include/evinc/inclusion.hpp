#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "evinc/convex_body.hpp"
#include "evinc/errors.hpp"
#include "evinc/grid.hpp"
#include "evinc/multimap.hpp"
#include "evinc/operators.hpp"
#include "evinc/rng.hpp"
#include "evinc/vec.hpp"

namespace evinc {

struct SolverOptions {
  double resolvent_tol = 1e-10;
  int resolvent_cap = 200;
};

/// One implicit step of -x' in A(t,x) + f: frozen forcing, resolvent in A.
inline Vec step_implicit(const MonotoneOp& A, double t, double dt, const Vec& x,
                         const Vec& f_next, const SolverOptions& opt = {}) {
  if (!(dt > 0.0)) throw InputError("step_implicit: dt must be positive");
  Vec rhs = x;
  axpy(-dt, f_next, rhs);
  return A.resolvent(t + dt, dt, rhs, opt.resolvent_tol, opt.resolvent_cap);
}

/// Implicit Euler for -x' in A(t,x) + f(t), x(0) = xi, with the forcing given
/// per node: x_{k+1} = (I + dt A(t_{k+1}, .))^{-1} (x_k - dt f_{k+1}).
inline Trajectory solve_forced(const MonotoneOp& A, const std::vector<Vec>& f,
                               const Vec& xi, const TimeGrid& grid,
                               const SolverOptions& opt = {}) {
  if (f.size() != grid.nodes()) throw InputError("solve_forced: forcing size mismatch");
  check_dim(xi, A.dim(), "solve_forced");
  std::vector<Vec> states;
  states.reserve(grid.nodes());
  states.push_back(xi);
  for (std::size_t k = 0; k + 1 < grid.nodes(); ++k) {
    try {
      states.push_back(step_implicit(A, grid.t(k), grid.dt(k), states.back(), f[k + 1], opt));
    } catch (const NumericalError& e) {
      throw NumericalError("solve_forced: step " + std::to_string(k) + " failed: " + e.what(),
                           e.residual);
    }
  }
  return Trajectory(grid, std::move(states));
}

inline Trajectory solve_unforced(const MonotoneOp& A, const Vec& xi, const TimeGrid& grid,
                                 const SolverOptions& opt = {}) {
  return solve_forced(A, std::vector<Vec>(grid.nodes(), zeros(A.dim())), xi, grid, opt);
}

/// Gronwall a-priori bound: every solution of the inclusion driven by A and F
/// satisfies |x(t)| <= M on the horizon. Assembled from
///   0.5|x(t)|^2 <= 0.5(|xi|^2 + 2||a2||_1 + ||a3||_2^2) + (c3 + 1/2) int |x|^2,
/// where the 1/2 enters only when a3 is nonzero (Young's inequality step).
inline double apriori_bound(const MonotoneOp& A, const MultiMap& F, const Vec& xi,
                            double lambda, double horizon) {
  (void)lambda;  // the declared growth data already covers the parameter range
  const auto& c = A.constants();
  if (!(c.c2 > 0.0))
    throw InputError("apriori_bound: operator must declare positive coercivity c2");
  const double a2_l1 = c.a2.l1(horizon);
  const double a3_l2 = F.a3().l2(horizon);
  const double c8 = std::sqrt(dot(xi, xi) + 2.0 * a2_l1 + a3_l2 * a3_l2);
  const double c9 = F.c3() + (a3_l2 > 0.0 ? 0.5 : 0.0);
  return c8 * std::exp(c9 * horizon);
}

/// Identity inside the ball of radius M, radial projection outside.
inline Vec radial_retract(Vec x, double M) {
  if (!(M > 0.0)) throw InputError("radial_retract: M must be positive");
  const double n = norm2(x);
  if (n <= M) return x;
  return scale(M / n, std::move(x));
}

enum class SelectionStrategy { MinimalNorm, ExtremePoint, RandomExtreme, ProjectPrevious };

inline SelectionStrategy selection_strategy_from_string(const std::string& s) {
  if (s == "minimal-norm") return SelectionStrategy::MinimalNorm;
  if (s == "extreme-point") return SelectionStrategy::ExtremePoint;
  if (s == "random-extreme") return SelectionStrategy::RandomExtreme;
  if (s == "project-previous") return SelectionStrategy::ProjectPrevious;
  throw InputError("unknown selection strategy: " + s);
}

namespace detail {

inline Vec extreme_in_direction(const ConvexBody& C, const Vec& v) {
  switch (C.kind()) {
    case ConvexBody::Kind::Point:
      return C.point_value();
    case ConvexBody::Kind::Box: {
      Vec e(C.dim());
      for (std::size_t i = 0; i < C.dim(); ++i) e[i] = v[i] >= 0.0 ? C.hi()[i] : C.lo()[i];
      return e;
    }
    case ConvexBody::Kind::Ball: {
      const double n = norm2(v);
      Vec e = C.center();
      if (n > 0.0) axpy(C.radius() / n, v, e);
      return e;
    }
  }
  return C.point_value();
}

inline Vec random_extreme(const ConvexBody& C, Rng& rng) {
  switch (C.kind()) {
    case ConvexBody::Kind::Point:
      return C.point_value();
    case ConvexBody::Kind::Box: {
      Vec e(C.dim());
      for (std::size_t i = 0; i < C.dim(); ++i)
        e[i] = rng.uniform_int(0, 1) ? C.hi()[i] : C.lo()[i];
      return e;
    }
    case ConvexBody::Kind::Ball: {
      Vec e = C.center();
      axpy(C.radius(), rng.unit_vec(C.dim()), e);
      return e;
    }
  }
  return C.point_value();
}

}  // namespace detail

struct SolutionSample {
  Trajectory state;
  std::vector<Vec> selection;  // selection[k] in F(t_k, predictor_k, lambda)
};

/// Samples the solution set of -x' in A(t,x) + F(t,x,lambda), x(0) = xi:
/// semi-implicit stepping, implicit in A, with the F-selection evaluated at
/// the predictor state x_k and fixed by the strategy. Deterministic under
/// the seed (sample i uses seed ^ i).
inline std::vector<SolutionSample> sample_solution_set(
    const MonotoneOp& A, const MultiMap& F, const Vec& xi, double lambda,
    const TimeGrid& grid, SelectionStrategy strategy, std::size_t count,
    std::uint64_t seed, const SolverOptions& opt = {}) {
  if (count == 0) throw InputError("sample_solution_set: count >= 1");
  std::vector<SolutionSample> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    Rng rng(mix_seed(seed, s));
    const Vec fixed_dir =
        strategy == SelectionStrategy::ExtremePoint ? rng.unit_vec(A.dim()) : Vec{};
    std::vector<Vec> states{xi};
    std::vector<Vec> sel;
    sel.reserve(grid.nodes());
    sel.push_back(project(zeros(A.dim()), F(0.0, xi, lambda)));
    for (std::size_t k = 0; k + 1 < grid.nodes(); ++k) {
      const ConvexBody value = F(grid.t(k + 1), states.back(), lambda);
      Vec f;
      switch (strategy) {
        case SelectionStrategy::MinimalNorm:
          f = project(zeros(A.dim()), value);
          break;
        case SelectionStrategy::ExtremePoint:
          f = detail::extreme_in_direction(value, fixed_dir);
          break;
        case SelectionStrategy::RandomExtreme:
          f = detail::random_extreme(value, rng);
          break;
        case SelectionStrategy::ProjectPrevious:
          f = project(sel.back(), value);
          break;
      }
      states.push_back(step_implicit(A, grid.t(k), grid.dt(k), states.back(), f, opt));
      sel.push_back(std::move(f));
    }
    out.push_back({Trajectory(grid, std::move(states)), std::move(sel)});
  }
  return out;
}

/// Nonexpansiveness report of the flow map: solutions from two initial states
/// under a shared forcing stay within |xi1 - xi2| of each other in sup norm.
struct ContractionReport {
  double initial_gap = 0.0;
  double sup_gap = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

inline ContractionReport contraction_check(const MonotoneOp& A, const Vec& xi1,
                                           const Vec& xi2, const std::vector<Vec>& f,
                                           const TimeGrid& grid,
                                           const SolverOptions& opt = {}) {
  const Trajectory x1 = solve_forced(A, f, xi1, grid, opt);
  const Trajectory x2 = solve_forced(A, f, xi2, grid, opt);
  ContractionReport rep;
  rep.initial_gap = dist2(xi1, xi2);
  rep.sup_gap = x1.sup_gap(x2);
  rep.tolerance = 10.0 * opt.resolvent_tol;
  rep.pass = rep.sup_gap <= rep.initial_gap + rep.tolerance;
  return rep;
}

}  // namespace evinc
