#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "evinc/control.hpp"
#include "evinc/errors.hpp"
#include "evinc/filippov.hpp"
#include "evinc/rng.hpp"
#include "evinc/vec.hpp"

namespace evinc {

struct ValueSurfaceEntry {
  Vec xi;
  double lambda = 0.0;
  double m_hat = 0.0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
};

struct ValueSurface {
  std::vector<ValueSurfaceEntry> entries;  // xi-major, lambda-minor order
  long budget = 0;
  std::uint64_t seed = 0;
};

inline unsigned worker_count() {
  if (const char* env = std::getenv("EVINC_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Seed derived from the point's content, so a sweep entry keeps its seed
/// under any reordering of the grids or of the scheduling.
inline std::uint64_t point_seed(std::uint64_t seed, const Vec& xi, double lambda) {
  std::uint64_t h = mix_seed(seed, 0x9e37);
  for (double v : xi) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    h = mix_seed(h, bits);
  }
  std::uint64_t lb;
  std::memcpy(&lb, &lambda, sizeof(lb));
  return mix_seed(h, lb);
}

/// value() at every (xi, lambda) grid point. Per-point seeds depend only on
/// the grid indices, so the surface is invariant under evaluation order;
/// failed points are flagged rather than aborting the sweep.
inline ValueSurface sweep_value(const ControlProblem& prob, const std::vector<Vec>& xi_grid,
                                const std::vector<double>& lambda_grid, long budget,
                                std::uint64_t seed, const OptimizeOptions& opt = {}) {
  if (xi_grid.empty() || lambda_grid.empty())
    throw InputError("sweep_value: grids must be nonempty");
  ValueSurface surface;
  surface.budget = budget;
  surface.seed = seed;
  const std::size_t total = xi_grid.size() * lambda_grid.size();
  surface.entries.resize(total);

  auto run_point = [&](std::size_t idx) {
    const std::size_t i = idx / lambda_grid.size();
    const std::size_t j = idx % lambda_grid.size();
    ValueSurfaceEntry& e = surface.entries[idx];
    e.xi = xi_grid[i];
    e.lambda = lambda_grid[j];
    e.seed = point_seed(seed, e.xi, e.lambda);
    try {
      e.m_hat = value(prob, e.xi, e.lambda, budget, e.seed, opt);
      e.ok = true;
    } catch (const std::exception& ex) {
      e.ok = false;
      e.error = ex.what();
    }
  };

  const unsigned workers = std::min<unsigned>(worker_count(), total);
  if (workers <= 1) {
    for (std::size_t idx = 0; idx < total; ++idx) run_point(idx);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t idx = w; idx < total; idx += workers) run_point(idx);
      });
    for (auto& t : pool) t.join();
  }
  return surface;
}

struct SequencePoint {
  Vec xi;
  double lambda = 0.0;
};

struct SequenceReport {
  Vec dist;          // product-metric distance to the target per n
  Vec value_gap;     // |m_hat_n - m_hat|
  Vec e_n;           // one-sided set distance, sequence -> target
  Vec reverse_e_n;   // target -> sequence sets; reported, not asserted
  double target_value = 0.0;
  double tol = 0.0;
  bool pass = false;
};

namespace detail {

inline void check_sequence(const ControlProblem& prob, const SequencePoint& target,
                           const std::vector<SequencePoint>& seq) {
  if (seq.empty()) throw InputError("sequence report: empty sequence");
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& q : seq) {
    const double d = dist2(q.xi, target.xi) + prob.E.metric(q.lambda, target.lambda);
    // strictly decreasing, except that a sequence sitting at the target is fine
    if (!(d < prev) && d > 1e-12)
      throw InputError("sequence report: distances must strictly decrease");
    prev = d;
  }
}

inline double max_over(const Vec& v, std::size_t from, std::size_t to) {
  double m = 0.0;
  for (std::size_t i = from; i < to; ++i) m = std::fmax(m, v[i]);
  return m;
}

/// sup-norm state gap plus L2 control gap between two admissible pairs.
inline double pair_distance(const AdmissiblePair& a, const AdmissiblePair& b) {
  const double state = a.state.sup_gap(b.state);
  const TimeGrid& g = a.state.grid;
  double ctrl_sq = 0.0;
  for (std::size_t k = 0; k + 1 < g.nodes(); ++k) {
    const double d0 = dist2(a.control[k], b.control[k]);
    const double d1 = dist2(a.control[k + 1], b.control[k + 1]);
    ctrl_sq += 0.5 * g.dt(k) * (d0 * d0 + d1 * d1);
  }
  return state + std::sqrt(ctrl_sq);
}

}  // namespace detail

/// Value gaps m_hat(xi_n, lambda_n) -> m_hat(xi, lambda) along a sequence
/// converging to the target. PASS when the last third of the gaps sits
/// below tol_scale*(1+|m_hat|) and does not exceed the first third.
inline SequenceReport continuity_report(const ControlProblem& prob,
                                        const SequencePoint& target,
                                        const std::vector<SequencePoint>& seq, long budget,
                                        std::uint64_t seed, double tol_scale = 5e-3,
                                        const OptimizeOptions& opt = {}) {
  detail::check_sequence(prob, target, seq);
  SequenceReport rep;
  rep.target_value =
      value(prob, target.xi, target.lambda, budget, mix_seed(seed, 0xA110), opt);
  rep.tol = tol_scale * (1.0 + std::fabs(rep.target_value));
  for (std::size_t n = 0; n < seq.size(); ++n) {
    rep.dist.push_back(dist2(seq[n].xi, target.xi) +
                       prob.E.metric(seq[n].lambda, target.lambda));
    const double mn = value(prob, seq[n].xi, seq[n].lambda, budget, mix_seed(seed, n + 1), opt);
    rep.value_gap.push_back(std::fabs(mn - rep.target_value));
  }
  const std::size_t n = rep.value_gap.size();
  const double first_third = detail::max_over(rep.value_gap, 0, std::max<std::size_t>(1, n / 3));
  const double last_third = detail::max_over(rep.value_gap, n - std::max<std::size_t>(1, n / 3), n);
  rep.pass = last_third <= rep.tol && last_third <= first_third + 0.01 * rep.tol;
  return rep;
}

/// One-sided set distances from sampled optimal sets along the sequence to
/// the sampled optimal set at the target. PASS when the final distance is
/// below tol and the last half does not exceed the first half. The reverse
/// distances are reported for inspection only.
inline SequenceReport usc_report(const ControlProblem& prob, const SequencePoint& target,
                                 const std::vector<SequencePoint>& seq, long budget,
                                 int count, double gap, std::uint64_t seed,
                                 double tol = 1e-1, const OptimizeOptions& opt = {}) {
  detail::check_sequence(prob, target, seq);
  SequenceReport rep;
  rep.tol = tol;
  const OptimalSetSample target_set =
      optimal_set_sample(prob, target.xi, target.lambda, budget, count, gap,
                         mix_seed(seed, 0xA110), opt);
  rep.target_value = target_set.m_hat;
  for (std::size_t n = 0; n < seq.size(); ++n) {
    rep.dist.push_back(dist2(seq[n].xi, target.xi) +
                       prob.E.metric(seq[n].lambda, target.lambda));
    const OptimalSetSample sn =
        optimal_set_sample(prob, seq[n].xi, seq[n].lambda, budget, count, gap,
                           mix_seed(seed, n + 1), opt);
    rep.value_gap.push_back(std::fabs(sn.m_hat - target_set.m_hat));
    double e = 0.0;
    for (const auto& p : sn.pairs) {
      double nearest = std::numeric_limits<double>::infinity();
      for (const auto& q : target_set.pairs)
        nearest = std::fmin(nearest, detail::pair_distance(p, q));
      e = std::fmax(e, nearest);
    }
    rep.e_n.push_back(e);
    double rev = 0.0;
    for (const auto& q : target_set.pairs) {
      double nearest = std::numeric_limits<double>::infinity();
      for (const auto& p : sn.pairs) nearest = std::fmin(nearest, detail::pair_distance(p, q));
      rev = std::fmax(rev, nearest);
    }
    rep.reverse_e_n.push_back(rev);
  }
  const std::size_t n = rep.e_n.size();
  const double first_half = detail::max_over(rep.e_n, 0, std::max<std::size_t>(1, n / 2));
  const double last_half = detail::max_over(rep.e_n, n - std::max<std::size_t>(1, n / 2), n);
  rep.pass = rep.e_n.back() <= tol && last_half <= first_half + 0.01 * tol;
  return rep;
}

struct QLiminfEntry {
  AdmissiblePair pair;
  double state_gap = 0.0;
  double control_gap = 0.0;              // equals the projection displacement
  double projection_displacement = 0.0;  // L2 norm of the control projection move
  double cert_bound = 0.0;               // certificate bound at the horizon
  bool admissible = false;
  bool cert_pass = false;
};

/// Constructive lower-limit check for the admissible-pair sets: given an
/// admissible target pair at (xi, lambda), build a pair at each perturbed
/// (xi_n, lambda_n) by projecting the control onto the perturbed constraint
/// ball and re-solving with the successive-approximation construction around
/// the target state. Gaps are certified by the per-run bound plus the
/// projection displacement.
inline std::vector<QLiminfEntry> q_liminf_construct(
    const ControlProblem& prob, const AdmissiblePair& target_pair,
    const SequencePoint& target, const std::vector<SequencePoint>& seq, double epsilon,
    double admissible_tol = 1e-5) {
  detail::check_sequence(prob, target, seq);
  const TimeGrid& g = target_pair.state.grid;
  const std::size_t n_nodes = g.nodes();

  // reference forcing: the recorded F-selection plus the control term
  std::vector<Vec> h_ref(n_nodes);
  for (std::size_t k = 0; k < n_nodes; ++k) {
    h_ref[k] = target_pair.selection[k];
    axpy(prob.g(g.t(k), target.lambda), target_pair.control[k], h_ref[k]);
  }

  std::vector<QLiminfEntry> out;
  for (const SequencePoint& q : seq) {
    const MonotoneOp A = prob.op(q.lambda);
    // project the control onto the perturbed constraint ball
    std::vector<Vec> u_n(n_nodes);
    double disp_sq = 0.0;
    for (std::size_t k = 0; k < n_nodes; ++k) {
      const double r = prob.radius(g.t(k), q.lambda);
      u_n[k] = target_pair.control[k];
      const double mag = norm2(u_n[k]);
      if (mag > r) u_n[k] = scale(r / mag, std::move(u_n[k]));
    }
    for (std::size_t k = 0; k + 1 < n_nodes; ++k) {
      const double d0 = dist2(u_n[k], target_pair.control[k]);
      const double d1 = dist2(u_n[k + 1], target_pair.control[k + 1]);
      disp_sq += 0.5 * g.dt(k) * (d0 * d0 + d1 * d1);
    }

    // multimap with the perturbed control forcing folded in per node
    std::vector<Vec> shift(n_nodes);
    for (std::size_t k = 0; k < n_nodes; ++k)
      shift[k] = scale(prob.g(g.t(k), q.lambda), u_n[k]);
    const MultiMap& F = prob.F;
    const double lam_n = q.lambda;
    MultiMap shifted(
        [&F, &g, shift, lam_n](double t, const Vec& x, double) {
          return F(t, x, lam_n).translated(shift[g.nearest_index(t)]);
        },
        F.lipschitz(), F.a3(), F.c3(), F.param_modulus());

    FilippovOptions fopt;
    fopt.solver = prob.solver;
    const FilippovResult res = filippov_construct(A, shifted, target_pair.state, h_ref,
                                                  lam_n, epsilon, fopt, &q.xi);

    QLiminfEntry entry{
        AdmissiblePair{res.trajectory, u_n, {}, {}, {}}, 0.0, 0.0, 0.0, 0.0, false, false};
    entry.pair.selection.resize(n_nodes);
    for (std::size_t k = 0; k < n_nodes; ++k)
      entry.pair.selection[k] = sub(res.selection[k], shift[k]);
    entry.state_gap = res.trajectory.sup_gap(target_pair.state);
    entry.projection_displacement = std::sqrt(disp_sq);
    entry.control_gap = entry.projection_displacement;
    entry.cert_bound = res.certificate.bound.back();
    entry.cert_pass = res.certificate.all_pass();
    const AdmissibilityReport rep =
        check_admissible(prob, entry.pair, q.xi, q.lambda, admissible_tol);
    entry.pair.inclusion_residual = rep.inclusion_residual;
    entry.pair.constraint_residual = rep.constraint_residual;
    entry.admissible = rep.pass;
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace evinc
