#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "evinc/convex_body.hpp"
#include "evinc/errors.hpp"
#include "evinc/grid.hpp"
#include "evinc/inclusion.hpp"
#include "evinc/multimap.hpp"
#include "evinc/operators.hpp"
#include "evinc/rng.hpp"
#include "evinc/time_fn.hpp"
#include "evinc/vec.hpp"

namespace evinc {

/// Running state cost L(t, x, lambda).
struct StateCost {
  enum class Kind { Zero, Quadratic, LinearSum };
  Kind kind = Kind::Zero;
  double weight = 0.0;
  Vec target;  // Quadratic: weight * |x - target|^2

  static StateCost zero() { return {}; }
  static StateCost quadratic(double w, Vec target) {
    return {Kind::Quadratic, w, std::move(target)};
  }
  static StateCost linear_sum(double w) { return {Kind::LinearSum, w, {}}; }

  double eval(double /*t*/, const Vec& x, double /*lambda*/) const {
    switch (kind) {
      case Kind::Zero:
        return 0.0;
      case Kind::Quadratic: {
        const double d = dist2(x, target);
        return weight * d * d;
      }
      case Kind::LinearSum: {
        double s = 0.0;
        for (double v : x) s += v;
        return weight * s;
      }
    }
    return 0.0;
  }
};

/// Control cost H(t, u, lambda); convex in u for the supported kinds.
struct ControlCost {
  enum class Kind { Zero, Quadratic };
  Kind kind = Kind::Zero;
  double weight = 0.0;
  Vec target;  // weight * |u - target|^2

  static ControlCost zero() { return {}; }
  static ControlCost quadratic(double w, Vec target) {
    return {Kind::Quadratic, w, std::move(target)};
  }

  double eval(double /*t*/, const Vec& u, double /*lambda*/) const {
    if (kind == Kind::Zero) return 0.0;
    const double d = dist2(u, target);
    return weight * d * d;
  }
};

/// Terminal cost psi(xi, x(b), lambda).
struct TerminalCost {
  enum class Kind { Zero, LinearSum, Quadratic };
  Kind kind = Kind::Zero;
  double weight = 0.0;
  Vec target;

  static TerminalCost zero() { return {}; }
  static TerminalCost linear_sum(double w) { return {Kind::LinearSum, w, {}}; }
  static TerminalCost quadratic(double w, Vec target) {
    return {Kind::Quadratic, w, std::move(target)};
  }

  double eval(const Vec& /*xi*/, const Vec& xb, double /*lambda*/) const {
    switch (kind) {
      case Kind::Zero:
        return 0.0;
      case Kind::LinearSum: {
        double s = 0.0;
        for (double v : xb) s += v;
        return weight * s;
      }
      case Kind::Quadratic: {
        const double d = dist2(xb, target);
        return weight * d * d;
      }
    }
    return 0.0;
  }
};

/// The parameter space E: a compact interval with |.| metric or a finite
/// sample with an optional explicit distance table.
struct ParamSpace {
  enum class Kind { Interval, Finite };
  Kind kind = Kind::Interval;
  double lo = 0.0, hi = 0.0;
  std::vector<double> values;
  std::vector<std::vector<double>> table;  // optional, indexed like values

  static ParamSpace interval(double lo, double hi) {
    if (!(lo <= hi)) throw InputError("ParamSpace::interval: lo <= hi required");
    ParamSpace e;
    e.kind = Kind::Interval;
    e.lo = lo;
    e.hi = hi;
    return e;
  }
  static ParamSpace finite(std::vector<double> values,
                           std::vector<std::vector<double>> table = {}) {
    if (values.empty()) throw InputError("ParamSpace::finite: empty");
    ParamSpace e;
    e.kind = Kind::Finite;
    e.values = std::move(values);
    e.table = std::move(table);
    return e;
  }

  double metric(double l1, double l2) const {
    if (kind == Kind::Finite && !table.empty()) {
      const auto idx = [&](double l) {
        for (std::size_t i = 0; i < values.size(); ++i)
          if (std::fabs(values[i] - l) <= 1e-12) return i;
        throw InputError("ParamSpace::metric: value not in the finite set");
      };
      return table[idx(l1)][idx(l2)];
    }
    return std::fabs(l1 - l2);
  }

  bool contains(double l) const {
    if (kind == Kind::Interval) return l >= lo - 1e-12 && l <= hi + 1e-12;
    for (double v : values)
      if (std::fabs(v - l) <= 1e-12) return true;
    return false;
  }
};

/// Full data bundle of one parametric optimal control problem:
/// cost J = int L + int H + psi over pairs obeying
///   -x' in A_lambda(t,x) + F(t,x,lambda) + g(t,lambda) u,
///   x(0) = xi, |u(t)| <= r(t,lambda).
struct ControlProblem {
  std::function<MonotoneOp(double lambda)> op_family;
  MultiMap F;
  TimeFn g_base{1.0};
  double g_lambda = 0.0;
  double g_bound = 1.0;  // declared |g| bound
  TimeFn r_base{1.0};
  double r_lambda = 0.0;
  StateCost L;
  ControlCost H;
  TerminalCost psi;
  ParamSpace E = ParamSpace::interval(0.0, 1.0);
  double p = 2.0;
  TimeGrid grid = TimeGrid::uniform(1.0, 64);
  SolverOptions solver;

  double g(double t, double lambda) const { return g_base(t) + g_lambda * lambda; }
  double radius(double t, double lambda) const {
    return std::fmax(0.0, r_base(t) + r_lambda * lambda);
  }
  MonotoneOp op(double lambda) const { return op_family(lambda); }
  std::size_t dim() const { return op_family(sample_lambda()).dim(); }
  double sample_lambda() const {
    return E.kind == ParamSpace::Kind::Interval ? E.lo : E.values.front();
  }
};

struct AdmissiblePair {
  Trajectory state;
  std::vector<Vec> control;    // u_k per node, in U(t_k, lambda)
  std::vector<Vec> selection;  // recorded F-selection per node
  Vec inclusion_residual;      // per step
  Vec constraint_residual;     // per node
};

inline double evaluate_cost(const ControlProblem& prob, const Trajectory& x,
                            const std::vector<Vec>& u, const Vec& xi, double lambda) {
  const TimeGrid& g = x.grid;
  if (u.size() != g.nodes()) throw InputError("evaluate_cost: control size mismatch");
  if (!(x.grid == prob.grid)) throw InputError("evaluate_cost: grid mismatch");
  double cost = 0.0;
  for (std::size_t k = 0; k + 1 < g.nodes(); ++k) {
    const double l0 = prob.L.eval(g.t(k), x.states[k], lambda);
    const double l1 = prob.L.eval(g.t(k + 1), x.states[k + 1], lambda);
    const double h0 = prob.H.eval(g.t(k), u[k], lambda);
    const double h1 = prob.H.eval(g.t(k + 1), u[k + 1], lambda);
    cost += 0.5 * g.dt(k) * (l0 + l1 + h0 + h1);
  }
  return cost + prob.psi.eval(xi, x.states.back(), lambda);
}

inline double evaluate_cost(const ControlProblem& prob, const AdmissiblePair& pair,
                            const Vec& xi, double lambda) {
  return evaluate_cost(prob, pair.state, pair.control, xi, lambda);
}

struct AdmissibilityReport {
  Vec inclusion_residual;
  Vec constraint_residual;
  double initial_residual = 0.0;
  double worst = 0.0;
  double tol = 0.0;
  bool pass = false;
};

/// Per-step inclusion residuals
///   rho_k = d( (x_k - x_{k+1})/dt - g u_{k+1},
///              A(t_{k+1}, x_{k+1}) + F(t_{k+1}, x_{k+1}, lambda) )
/// plus control-constraint and initial-state residuals.
inline AdmissibilityReport check_admissible(const ControlProblem& prob,
                                            const AdmissiblePair& pair, const Vec& xi,
                                            double lambda, double tol) {
  const TimeGrid& g = pair.state.grid;
  const MonotoneOp A = prob.op(lambda);
  AdmissibilityReport rep;
  rep.tol = tol;
  rep.initial_residual = dist2(pair.state.states[0], xi);
  rep.worst = rep.initial_residual;
  rep.inclusion_residual.resize(g.steps());
  rep.constraint_residual.resize(g.nodes());
  for (std::size_t k = 0; k < g.steps(); ++k) {
    const double t1 = g.t(k + 1);
    Vec lhs = sub(pair.state.states[k], pair.state.states[k + 1]);
    lhs = scale(1.0 / g.dt(k), std::move(lhs));
    axpy(-prob.g(t1, lambda), pair.control[k + 1], lhs);
    const ConvexBody a_val = A.value(t1, pair.state.states[k + 1]);
    const ConvexBody f_val = prob.F(t1, pair.state.states[k + 1], lambda);
    rep.inclusion_residual[k] = distance_to_sum(lhs, a_val, f_val);
    rep.worst = std::fmax(rep.worst, rep.inclusion_residual[k]);
  }
  for (std::size_t k = 0; k < g.nodes(); ++k) {
    rep.constraint_residual[k] =
        std::fmax(0.0, norm2(pair.control[k]) - prob.radius(g.t(k), lambda));
    rep.worst = std::fmax(rep.worst, rep.constraint_residual[k]);
  }
  rep.pass = rep.worst <= tol;
  return rep;
}

namespace detail {

inline std::vector<Vec> greedy_candidates(const ConvexBody& C) {
  std::vector<Vec> cands;
  switch (C.kind()) {
    case ConvexBody::Kind::Point:
      cands.push_back(C.point_value());
      break;
    case ConvexBody::Kind::Box: {
      const std::size_t n = C.dim();
      Vec mid(n);
      for (std::size_t i = 0; i < n; ++i) mid[i] = 0.5 * (C.lo()[i] + C.hi()[i]);
      if (n <= 4) {
        for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
          Vec v(n);
          for (std::size_t i = 0; i < n; ++i)
            v[i] = (mask >> i) & 1 ? C.hi()[i] : C.lo()[i];
          cands.push_back(std::move(v));
        }
      } else {
        // axis extremes around the midpoint for wide boxes
        for (std::size_t i = 0; i < n; ++i) {
          Vec v = mid;
          v[i] = C.lo()[i];
          cands.push_back(v);
          v[i] = C.hi()[i];
          cands.push_back(std::move(v));
        }
      }
      cands.push_back(std::move(mid));
      break;
    }
    case ConvexBody::Kind::Ball: {
      const std::size_t n = C.dim();
      cands.push_back(C.center());
      if (C.radius() > 0.0)
        for (std::size_t i = 0; i < n; ++i) {
          Vec v = C.center();
          v[i] += C.radius();
          cands.push_back(v);
          v[i] -= 2.0 * C.radius();
          cands.push_back(std::move(v));
        }
      break;
    }
  }
  return cands;
}

}  // namespace detail

/// Rollout of the semi-implicit scheme under a fixed control: at each step
/// the F-selection is chosen greedily among the value set's extreme points
/// (plus midpoint) to minimize the local running cost, with the terminal
/// cost joining at the last step; ties resolve toward the previous
/// selection. Returns the trajectory and the recorded selection.
inline std::pair<Trajectory, std::vector<Vec>> rollout(
    const ControlProblem& prob, const MonotoneOp& A, const std::vector<Vec>& u,
    const Vec& xi, double lambda) {
  const TimeGrid& g = prob.grid;
  std::vector<Vec> states{xi};
  std::vector<Vec> sel;
  sel.reserve(g.nodes());
  sel.push_back(project(zeros(A.dim()), prob.F(0.0, xi, lambda)));
  for (std::size_t k = 0; k + 1 < g.nodes(); ++k) {
    const double t1 = g.t(k + 1);
    const ConvexBody f_val = prob.F(t1, states.back(), lambda);
    const std::vector<Vec> cands = detail::greedy_candidates(f_val);
    const double gu = prob.g(t1, lambda);
    double best_cost = std::numeric_limits<double>::infinity();
    double best_tie = std::numeric_limits<double>::infinity();
    Vec best_state, best_f;
    for (const Vec& f : cands) {
      Vec forcing = f;
      axpy(gu, u[k + 1], forcing);
      Vec x_next = step_implicit(A, g.t(k), g.dt(k), states.back(), forcing, prob.solver);
      double local = prob.L.eval(t1, x_next, lambda) * g.dt(k);
      if (k + 2 == g.nodes()) local += prob.psi.eval(xi, x_next, lambda);
      const double tie = dist2(f, sel.back());
      if (local < best_cost - 1e-15 ||
          (local <= best_cost + 1e-15 && tie < best_tie)) {
        best_cost = local;
        best_tie = tie;
        best_state = std::move(x_next);
        best_f = f;
      }
    }
    states.push_back(std::move(best_state));
    sel.push_back(std::move(best_f));
  }
  return {Trajectory(g, std::move(states)), std::move(sel)};
}

struct OptimizeOptions {
  int multistarts = 8;
  int max_sweeps = 30;
  double improvement_tol = 1e-13;
};

struct OptimizeResult {
  AdmissiblePair pair;
  double value = 0.0;
  bool converged = false;  // false when the budget ran out mid-iteration
  long evals = 0;
  std::uint64_t seed = 0;
};

namespace detail {

inline bool lex_less(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t j = 0; j < a[k].size(); ++j) {
      if (a[k][j] < b[k][j]) return true;
      if (a[k][j] > b[k][j]) return false;
    }
  return false;
}

}  // namespace detail

/// Direct method over node-wise controls: multistart projected coordinate
/// descent, each scalar coordinate minimized on its feasible interval by a
/// three-point quadratic fit (exact for the quadratic costs, lands on the
/// bounds for bang-bang ones). The budget counts cost rollouts; runs are
/// truncated mid-sweep when it is exhausted, so values are monotone in the
/// budget under a fixed seed. Equal-cost results tie-break toward the
/// lexicographically smallest control.
inline OptimizeResult optimize(const ControlProblem& prob, const Vec& xi, double lambda,
                               long budget, std::uint64_t seed,
                               const OptimizeOptions& opt = {}) {
  if (budget < 1) throw InputError("optimize: budget >= 1");
  const MonotoneOp A = prob.op(lambda);
  const TimeGrid& g = prob.grid;
  const std::size_t n_nodes = g.nodes();
  const std::size_t dim = A.dim();

  long evals = 0;
  bool exhausted = false;
  auto cost_of = [&](const std::vector<Vec>& u) {
    ++evals;
    auto [x, sel] = rollout(prob, A, u, xi, lambda);
    return evaluate_cost(prob, x, u, xi, lambda);
  };

  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<Vec> best_u;
  auto consider = [&](double c, const std::vector<Vec>& u) {
    if (c < best_cost || (c == best_cost && detail::lex_less(u, best_u))) {
      best_cost = c;
      best_u = u;
    }
  };

  for (int start = 0; start < opt.multistarts && !exhausted; ++start) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(start)));
    std::vector<Vec> u(n_nodes);
    for (std::size_t k = 0; k < n_nodes; ++k) {
      const double r = prob.radius(g.t(k), lambda);
      u[k] = (start == 0 || r == 0.0) ? zeros(dim) : rng.ball_vec(dim, r);
    }
    if (evals >= budget) {
      exhausted = true;
      break;
    }
    double current = cost_of(u);
    consider(current, u);

    for (int sweep = 0; sweep < opt.max_sweeps && !exhausted; ++sweep) {
      const double sweep_start_cost = current;
      for (std::size_t k = 0; k < n_nodes && !exhausted; ++k) {
        const double r = prob.radius(g.t(k), lambda);
        if (r == 0.0) continue;
        for (std::size_t j = 0; j < dim && !exhausted; ++j) {
          double others = 0.0;
          for (std::size_t jj = 0; jj < dim; ++jj)
            if (jj != j) others += u[k][jj] * u[k][jj];
          const double span = std::sqrt(std::fmax(0.0, r * r - others));
          if (span <= 0.0) {
            if (u[k][j] != 0.0) {
              u[k][j] = 0.0;
              current = cost_of(u);
              consider(current, u);
            }
            continue;
          }
          const double c0 = u[k][j];
          auto eval_at = [&](double v) {
            u[k][j] = v;
            return cost_of(u);
          };
          struct Pt {
            double v, c;
          };
          std::vector<Pt> pts;
          pts.push_back({c0, current});
          if (evals + 3 > budget) {
            exhausted = true;
            u[k][j] = c0;
            break;
          }
          const double lo_v = -span, hi_v = span;
          if (std::fabs(c0 - lo_v) > 1e-15) pts.push_back({lo_v, eval_at(lo_v)});
          if (std::fabs(c0 - hi_v) > 1e-15) pts.push_back({hi_v, eval_at(hi_v)});
          if (pts.size() < 3) {
            const double mid = 0.5 * (lo_v + hi_v);
            if (std::fabs(c0 - mid) > 1e-15) pts.push_back({mid, eval_at(mid)});
          }
          // quadratic fit through three distinct points, evaluated if interior
          if (pts.size() == 3 && evals < budget) {
            const double x1 = pts[0].v, x2 = pts[1].v, x3 = pts[2].v;
            const double y1 = pts[0].c, y2 = pts[1].c, y3 = pts[2].c;
            const double d21 = (y2 - y1) / (x2 - x1);
            const double d32 = (y3 - y2) / (x3 - x2);
            const double a2 = (d32 - d21) / (x3 - x1);
            if (a2 > 1e-300) {
              const double vtx = 0.5 * (x1 + x2 - d21 / a2);
              if (vtx > lo_v + 1e-15 && vtx < hi_v - 1e-15) pts.push_back({vtx, eval_at(vtx)});
            }
          }
          Pt best_pt = pts[0];
          for (const Pt& q : pts)
            if (q.c < best_pt.c || (q.c == best_pt.c && std::fabs(q.v) < std::fabs(best_pt.v)))
              best_pt = q;
          u[k][j] = best_pt.v;
          current = best_pt.c;
          consider(current, u);
        }
      }
      if (sweep_start_cost - current <= opt.improvement_tol * (1.0 + std::fabs(current)))
        break;
    }
  }

  if (best_u.empty()) {
    best_u.assign(n_nodes, zeros(dim));
    best_cost = cost_of(best_u);
  }

  auto [x, sel] = rollout(prob, A, best_u, xi, lambda);
  const double final_value = evaluate_cost(prob, x, best_u, xi, lambda);
  AdmissiblePair pair{std::move(x), std::move(best_u), std::move(sel), {}, {}};
  const AdmissibilityReport rep =
      check_admissible(prob, pair, xi, lambda, 10.0 * prob.solver.resolvent_tol);
  pair.inclusion_residual = rep.inclusion_residual;
  pair.constraint_residual = rep.constraint_residual;
  return OptimizeResult{std::move(pair), final_value, !exhausted, evals, seed};
}

inline double value(const ControlProblem& prob, const Vec& xi, double lambda, long budget,
                    std::uint64_t seed, const OptimizeOptions& opt = {}) {
  return optimize(prob, xi, lambda, budget, seed, opt).value;
}

struct OptimalSetSample {
  std::vector<AdmissiblePair> pairs;  // retained near-optimal pairs
  Vec costs;                          // costs of the retained pairs
  double m_hat = 0.0;                 // best cost across all runs
  double spread = 0.0;                // max retained cost - m_hat
  double gap = 0.0;
};

/// `count` independent multistart optimizations; pairs within `gap` of the
/// best value are retained as the sample of the optimal set.
inline OptimalSetSample optimal_set_sample(const ControlProblem& prob, const Vec& xi,
                                           double lambda, long budget, int count,
                                           double gap, std::uint64_t seed,
                                           const OptimizeOptions& opt = {}) {
  if (!(gap > 0.0)) throw InputError("optimal_set_sample: gap > 0 required");
  if (count < 1) throw InputError("optimal_set_sample: count >= 1");
  std::vector<OptimizeResult> runs;
  runs.reserve(count);
  for (int i = 0; i < count; ++i)
    runs.push_back(optimize(prob, xi, lambda, budget, mix_seed(seed, i), opt));
  OptimalSetSample out;
  out.gap = gap;
  out.m_hat = std::numeric_limits<double>::infinity();
  for (const auto& r : runs) out.m_hat = std::fmin(out.m_hat, r.value);
  for (auto& r : runs)
    if (r.value <= out.m_hat + gap) {
      out.spread = std::fmax(out.spread, r.value - out.m_hat);
      out.costs.push_back(r.value);
      out.pairs.push_back(std::move(r.pair));
    }
  return out;
}

}  // namespace evinc
