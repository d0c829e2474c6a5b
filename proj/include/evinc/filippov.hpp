#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "evinc/errors.hpp"
#include "evinc/grid.hpp"
#include "evinc/inclusion.hpp"
#include "evinc/multimap.hpp"
#include "evinc/operators.hpp"
#include "evinc/vec.hpp"

namespace evinc {

/// Per-node error budget of the successive-approximation construction around
/// a near-solution with defect p(t) = d(h(t), F(t, u(t), lambda)):
///
///   |x(t_k) - u(t_k)| <= (|xi - u(0)| + b*eps) e^{tau(t_k)}
///                        + sum_{j<=k} p(t_j) e^{tau(t_k) - tau(t_j)} dt_j,
///
/// tau(t) = int_0^t k(s) ds. The initial-gap term vanishes in the matched
/// case x(0) = u(0). The sum is the rectangle discretization of
/// int_0^{t_k} p(s) e^{tau(t_k)-tau(s)} ds including the j = 0 cell, so it
/// majorizes the step-level error of the implicit scheme.
struct FilippovCertificate {
  double epsilon = 0.0;
  double initial_gap = 0.0;
  double allowance = 0.0;          // discretization slack added to the bound
  Vec tau;                          // tau(t_k)
  Vec defect;                       // p(t_k)
  Vec bound;                        // B_k
  Vec deviation;                    // |x(t_k) - u(t_k)|
  std::vector<bool> node_pass;      // deviation <= bound + allowance
  Vec iterate_l1_gaps;              // ||gamma^n - gamma^{n-1}||_{L1}, n = 1,2,...
  double defect_l1 = 0.0;
  double eta_l1 = 0.0;              // ||a2 + c2 |x_0|||_{L1} along the unforced solve
  double tau_b = 0.0;
  int iterations = 0;

  bool all_pass() const {
    for (bool b : node_pass)
      if (!b) return false;
    return true;
  }

  /// Factorial decay envelope for the n-th successive L1 gap:
  /// tau(b)^n / n! times (defect L1 + eta L1 + 2 b eps). The defect term
  /// controls the first gap when the construction starts from a defective
  /// reference; the other two terms are the budget of the inductive bound.
  double envelope(int n, double horizon) const {
    double v = defect_l1 + eta_l1 + 2.0 * horizon * epsilon;
    for (int i = 1; i <= n; ++i) v *= tau_b / static_cast<double>(i);
    return v;
  }
};

struct FilippovResult {
  Trajectory trajectory;
  std::vector<Vec> selection;  // member of F(t_k, x(t_k), lambda) per node
  FilippovCertificate certificate;
};

struct FilippovOptions {
  int iteration_cap = 60;
  double allowance = 0.0;
  SolverOptions solver;
};

/// Nodal values of eta(t) = a2(t) + c2 |x_0(t)| along the unforced solve
/// from xi; feeds the decay diagnostics.
inline Vec filippov_eta(const MonotoneOp& A, const Vec& xi, const TimeGrid& grid,
                        const SolverOptions& opt = {}) {
  const Trajectory x0 = solve_unforced(A, xi, grid, opt);
  Vec eta(grid.nodes());
  for (std::size_t k = 0; k < grid.nodes(); ++k)
    eta[k] = A.constants().a2(grid.t(k)) + A.constants().c2 * norm2(x0.states[k]);
  return eta;
}

namespace detail {

inline double trapezoid(const TimeGrid& g, const Vec& f) {
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < g.nodes(); ++k) s += 0.5 * g.dt(k) * (f[k] + f[k + 1]);
  return s;
}

}  // namespace detail

/// Diagnostic closed form of the inductive per-iterate budget
///   beta_n(t) = 2 int_0^t eta(s) (tau(t)-tau(s))^{n-1}/(n-1)! ds
///             + 2 b (sum_{k=0..n} eps/2^{k+1}) tau(t)^{n-1}/(n-1)! ,
/// recomputed from scratch per n rather than accumulated.
inline Vec filippov_beta_diag(const MonotoneOp& A, const MultiMap& F, const Vec& xi,
                              const TimeGrid& grid, double epsilon, int n,
                              const SolverOptions& opt = {}) {
  if (n < 1) throw InputError("filippov_beta_diag: n >= 1");
  const Vec eta = filippov_eta(A, xi, grid, opt);
  const double b = grid.horizon();
  double eps_sum = 0.0;
  for (int k = 0; k <= n; ++k) eps_sum += epsilon / std::pow(2.0, k + 1);
  auto fact_pow = [&](double base) {  // base^(n-1)/(n-1)!
    double v = 1.0;
    for (int i = 1; i <= n - 1; ++i) v *= base / static_cast<double>(i);
    return v;
  };
  Vec beta(grid.nodes(), 0.0);
  for (std::size_t k = 0; k < grid.nodes(); ++k) {
    const double tau_t = F.tau(grid.t(k));
    double integral = 0.0;
    for (std::size_t j = 0; j + 1 <= k; ++j) {
      const double g0 = eta[j] * fact_pow(tau_t - F.tau(grid.t(j)));
      const double g1 = eta[j + 1] * fact_pow(tau_t - F.tau(grid.t(j + 1)));
      integral += 0.5 * grid.dt(j) * (g0 + g1);
    }
    beta[k] = 2.0 * integral + 2.0 * b * eps_sum * fact_pow(tau_t);
  }
  return beta;
}

/// Successive approximation around a reference trajectory u with forcing h:
/// starting from the nodewise projection of h onto F(., u, lambda), repeat
///   x^n = solve_forced(A, gamma^{n-1}, xi),
///   gamma^n(t_k) = project(gamma^{n-1}(t_k), F(t_k, x^n(t_k), lambda)),
/// until the successive L1 gap falls below eps*b/2^n. Returns the limit
/// trajectory, its selection, and the per-node certificate.
///
/// xi defaults to the reference initial state; passing a different xi adds
/// the |xi - u(0)| e^{tau} term to the bound.
inline FilippovResult filippov_construct(const MonotoneOp& A, const MultiMap& F,
                                         const Trajectory& reference,
                                         const std::vector<Vec>& reference_forcing,
                                         double lambda, double epsilon,
                                         const FilippovOptions& opt = {},
                                         const Vec* xi_override = nullptr) {
  if (!(epsilon > 0.0)) throw InputError("filippov_construct: epsilon must be positive");
  if (reference_forcing.size() != reference.grid.nodes())
    throw InputError("filippov_construct: forcing size mismatch");
  const TimeGrid& grid = reference.grid;
  const std::size_t n_nodes = grid.nodes();
  const double b = grid.horizon();
  const Vec xi = xi_override ? *xi_override : reference.states[0];

  FilippovCertificate cert;
  cert.epsilon = epsilon;
  cert.initial_gap = dist2(xi, reference.states[0]);
  cert.allowance = opt.allowance;
  cert.tau.resize(n_nodes);
  cert.defect.resize(n_nodes);
  for (std::size_t k = 0; k < n_nodes; ++k) {
    cert.tau[k] = F.tau(grid.t(k));
    cert.defect[k] =
        distance(reference_forcing[k], F(grid.t(k), reference.states[k], lambda));
  }
  cert.tau_b = cert.tau.back();
  cert.defect_l1 = detail::trapezoid(grid, cert.defect);
  cert.eta_l1 = detail::trapezoid(grid, filippov_eta(A, xi, grid, opt.solver));

  // gamma^0: nodewise nearest selection to the reference forcing
  std::vector<Vec> gamma(n_nodes);
  for (std::size_t k = 0; k < n_nodes; ++k)
    gamma[k] = project(reference_forcing[k], F(grid.t(k), reference.states[k], lambda));

  Trajectory x = solve_forced(A, gamma, xi, grid, opt.solver);
  bool converged = false;
  for (int n = 1; n <= opt.iteration_cap; ++n) {
    std::vector<Vec> next(n_nodes);
    for (std::size_t k = 0; k < n_nodes; ++k)
      next[k] = project(gamma[k], F(grid.t(k), x.states[k], lambda));
    const double gap = l1_gap(grid, gamma, next);
    cert.iterate_l1_gaps.push_back(gap);
    gamma = std::move(next);
    cert.iterations = n;
    x = solve_forced(A, gamma, xi, grid, opt.solver);
    if (gap <= epsilon * b / std::pow(2.0, n)) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    const auto& g = cert.iterate_l1_gaps;
    const double ratio =
        (g.size() >= 2 && g[g.size() - 2] > 0.0) ? g.back() / g[g.size() - 2] : 1.0;
    throw ConvergenceError("filippov_construct: iteration cap reached", ratio);
  }

  // final selection: exact members of F along the limit trajectory
  std::vector<Vec> selection(n_nodes);
  for (std::size_t k = 0; k < n_nodes; ++k)
    selection[k] = project(gamma[k], F(grid.t(k), x.states[k], lambda));

  cert.bound.resize(n_nodes);
  cert.deviation.resize(n_nodes);
  cert.node_pass.resize(n_nodes);
  for (std::size_t k = 0; k < n_nodes; ++k) {
    double budget = 0.0;
    if (k > 0) {
      for (std::size_t j = 0; j <= k; ++j) {
        const double dt_j = (j == 0) ? grid.dt(0) : grid.dt(j - 1);
        budget += cert.defect[j] * std::exp(cert.tau[k] - cert.tau[j]) * dt_j;
      }
    }
    cert.bound[k] =
        (cert.initial_gap + b * epsilon) * std::exp(cert.tau[k]) + budget;
    cert.deviation[k] = dist2(x.states[k], reference.states[k]);
    cert.node_pass[k] = cert.deviation[k] <= cert.bound[k] + cert.allowance;
  }

  return FilippovResult{std::move(x), std::move(selection), std::move(cert)};
}

}  // namespace evinc
