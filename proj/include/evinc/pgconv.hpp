#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "evinc/errors.hpp"
#include "evinc/grid.hpp"
#include "evinc/inclusion.hpp"
#include "evinc/operators.hpp"
#include "evinc/vec.hpp"

namespace evinc {

/// A family of oscillating diffusion coefficients on (0,1): member n samples
/// the 1-periodic generator at n-fold frequency, a_n(z) = a(n z).
struct CoefficientFamily {
  enum class Kind { Constant, TwoPhase };
  Kind kind = Kind::Constant;
  double v1 = 1.0;
  double v2 = 1.0;
  double split = 0.5;  // two-phase: v1 on [0, split), v2 on [split, 1)
  double c_lo = 1.0;   // declared bounds
  double c_hi = 1.0;
  double p = 2.0;
  int space_dim = 1;

  static CoefficientFamily constant(double value, double p = 2.0) {
    CoefficientFamily f;
    f.kind = Kind::Constant;
    f.v1 = f.v2 = value;
    f.c_lo = f.c_hi = value;
    f.p = p;
    f.validate();
    return f;
  }

  static CoefficientFamily two_phase(double v1, double v2, double split, double p = 2.0) {
    CoefficientFamily f;
    f.kind = Kind::TwoPhase;
    f.v1 = v1;
    f.v2 = v2;
    f.split = split;
    f.c_lo = std::fmin(v1, v2);
    f.c_hi = std::fmax(v1, v2);
    f.p = p;
    f.validate();
    return f;
  }

  void validate() const {
    if (space_dim != 1)
      throw InputError("CoefficientFamily: only the 1-d case is supported");
    if (!(c_lo > 0.0)) throw InputError("CoefficientFamily: coefficients must be positive");
    if (kind == Kind::TwoPhase && !(split > 0.0 && split < 1.0))
      throw InputError("CoefficientFamily: split must lie in (0,1)");
    if (p < 2.0) throw InputError("CoefficientFamily: p must satisfy 2 <= p");
  }

  double generator(double z) const {
    if (kind == Kind::Constant) return v1;
    const double frac = z - std::floor(z);
    return frac < split ? v1 : v2;
  }

  Vec member_weights(int n, std::size_t m) const {
    if (n < 1) throw InputError("CoefficientFamily: member index n >= 1");
    const double dz = 1.0 / static_cast<double>(m + 1);
    Vec w(m + 1);
    for (std::size_t i = 0; i <= m; ++i)
      w[i] = generator(static_cast<double>(n) * (static_cast<double>(i) + 0.5) * dz);
    return w;
  }

  WeightedPLaplacian member(int n, std::size_t m) const {
    return WeightedPLaplacian{m, member_weights(n, m), p, c_lo, c_hi};
  }
};

/// Constant effective coefficient of the oscillating family:
/// a_hom^{-(p'-1)} equals the period average of a(z)^{-(p'-1)}; at p = 2
/// this is the harmonic mean.
inline double homogenized_coefficient(const CoefficientFamily& family) {
  family.validate();
  const double q = 1.0 / (family.p - 1.0);  // p' - 1
  double mean;
  if (family.kind == CoefficientFamily::Kind::Constant) {
    mean = std::pow(family.v1, -q);
  } else {
    mean = family.split * std::pow(family.v1, -q) +
           (1.0 - family.split) * std::pow(family.v2, -q);
  }
  return std::pow(mean, -1.0 / q);
}

inline WeightedPLaplacian homogenized_limit(const CoefficientFamily& family, std::size_t m) {
  const double a_hom = homogenized_coefficient(family);
  return WeightedPLaplacian{m, Vec(m + 1, a_hom), family.p,
                            std::fmin(a_hom, family.c_lo), std::fmax(a_hom, family.c_hi)};
}

/// Solves y' + a_n(y) = h on the grid; the forcing enters the implicit-Euler
/// driver with a sign flip because the solver integrates -y' = a_n(y) + f,
/// i.e. f = -h.
inline Trajectory solve_family_member(const CoefficientFamily& family, int n,
                                      const std::vector<Vec>& h, const Vec& xi,
                                      const TimeGrid& grid, const SolverOptions& opt = {}) {
  const MonotoneOp A = MonotoneOp::plaplacian(family.member(n, xi.size()));
  std::vector<Vec> f(h.size());
  for (std::size_t k = 0; k < h.size(); ++k) f[k] = scale(-1.0, Vec(h[k]));
  return solve_forced(A, f, xi, grid, opt);
}

inline Trajectory solve_homogenized(const CoefficientFamily& family,
                                    const std::vector<Vec>& h, const Vec& xi,
                                    const TimeGrid& grid, const SolverOptions& opt = {}) {
  const MonotoneOp A = MonotoneOp::plaplacian(homogenized_limit(family, xi.size()));
  std::vector<Vec> f(h.size());
  for (std::size_t k = 0; k < h.size(); ++k) f[k] = scale(-1.0, Vec(h[k]));
  return solve_forced(A, f, xi, grid, opt);
}

/// A smooth space profile paired against the solution over a time window
/// (node index range): the finite surrogate of testing weak convergence.
struct TestFunctional {
  int id = 0;
  Vec profile;             // values at the interior space nodes
  std::size_t node_lo = 0; // window [t_{node_lo}, t_{node_hi}]
  std::size_t node_hi = 0;
};

/// First `modes` discrete sine modes crossed with `windows` equal time
/// windows.
inline std::vector<TestFunctional> default_test_functionals(std::size_t m,
                                                            const TimeGrid& grid,
                                                            int modes = 5,
                                                            int windows = 3) {
  std::vector<TestFunctional> out;
  const double dz = 1.0 / static_cast<double>(m + 1);
  int id = 0;
  for (int mode = 1; mode <= modes; ++mode) {
    Vec profile(m);
    for (std::size_t i = 0; i < m; ++i)
      profile[i] = std::sin(mode * M_PI * (static_cast<double>(i) + 1.0) * dz);
    for (int w = 0; w < windows; ++w) {
      TestFunctional f;
      f.id = id++;
      f.profile = profile;
      f.node_lo = grid.steps() * w / windows;
      f.node_hi = grid.steps() * (w + 1) / windows;
      out.push_back(std::move(f));
    }
  }
  return out;
}

/// Time-space pairing of a grid function against a functional: trapezoid in
/// time over the window, dz-weighted inner product in space.
inline double pairing(const Trajectory& y, const TestFunctional& f) {
  const std::size_t m = y.dim();
  const double dz = 1.0 / static_cast<double>(m + 1);
  auto space_dot = [&](const Vec& x) { return dz * dot(x, f.profile); };
  double s = 0.0;
  for (std::size_t k = f.node_lo; k < f.node_hi; ++k)
    s += 0.5 * y.grid.dt(k) * (space_dot(y.states[k]) + space_dot(y.states[k + 1]));
  return s;
}

/// Discrete L^p(T x Omega) norm of the space gradient of a grid function.
inline double gradient_lp_norm(const Trajectory& y, double p) {
  const std::size_t m = y.dim();
  const double dz = 1.0 / static_cast<double>(m + 1);
  auto space_term = [&](const Vec& x) {
    double s = 0.0;
    for (std::size_t i = 0; i <= m; ++i) {
      const double left = (i == 0) ? 0.0 : x[i - 1];
      const double right = (i == m) ? 0.0 : x[i];
      s += dz * std::pow(std::fabs((right - left) / dz), p);
    }
    return s;
  };
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < y.grid.nodes(); ++k)
    s += 0.5 * y.grid.dt(k) * (space_term(y.states[k]) + space_term(y.states[k + 1]));
  return std::pow(s, 1.0 / p);
}

struct PGEntry {
  int n = 0;
  int functional_id = 0;
  double pairing = 0.0;
  double limit_pairing = 0.0;
  double gap = 0.0;
};

struct PGReport {
  std::vector<PGEntry> entries;  // n-major, functional-minor
  std::vector<int> n_list;
  Vec gradient_norms;            // per member
  double limit_gradient_norm = 0.0;
  double tol_pg = 0.0;
  double worst_first_gap = 0.0;  // max gap at the smallest n
  double worst_final_gap = 0.0;  // max gap at the largest n
  bool pass = false;

  double max_gap_for(int n) const {
    double m = 0.0;
    for (const auto& e : entries)
      if (e.n == n) m = std::fmax(m, std::fabs(e.gap));
    return m;
  }
};

/// Pairs each family member's solve against the homogenized solve over the
/// test functionals. PASS when the worst pairing gap decreases from the
/// first to the last member and the final gap is below tol_pg. Strong-norm
/// data (gradient norms) is reported alongside: it stays bounded but does
/// not converge, which is the point of testing weak convergence.
inline PGReport run_pg_experiment(const CoefficientFamily& family, const std::vector<Vec>& h,
                                  const Vec& xi, const TimeGrid& grid,
                                  const std::vector<int>& n_list,
                                  const std::vector<TestFunctional>& functionals,
                                  double tol_pg, const SolverOptions& opt = {}) {
  if (n_list.empty()) throw InputError("run_pg_experiment: empty n list");
  for (std::size_t i = 1; i < n_list.size(); ++i)
    if (!(n_list[i] > n_list[i - 1]))
      throw InputError("run_pg_experiment: n list must be increasing");
  PGReport rep;
  rep.n_list = n_list;
  rep.tol_pg = tol_pg;
  const Trajectory y_lim = solve_homogenized(family, h, xi, grid, opt);
  rep.limit_gradient_norm = gradient_lp_norm(y_lim, family.p);
  std::vector<double> limit_pairings;
  limit_pairings.reserve(functionals.size());
  for (const auto& f : functionals) limit_pairings.push_back(pairing(y_lim, f));

  for (int n : n_list) {
    const Trajectory y = solve_family_member(family, n, h, xi, grid, opt);
    rep.gradient_norms.push_back(gradient_lp_norm(y, family.p));
    for (std::size_t j = 0; j < functionals.size(); ++j) {
      PGEntry e;
      e.n = n;
      e.functional_id = functionals[j].id;
      e.pairing = pairing(y, functionals[j]);
      e.limit_pairing = limit_pairings[j];
      e.gap = e.pairing - e.limit_pairing;
      rep.entries.push_back(e);
    }
  }
  rep.worst_first_gap = rep.max_gap_for(n_list.front());
  rep.worst_final_gap = rep.max_gap_for(n_list.back());
  rep.pass = rep.worst_final_gap <= tol_pg &&
             (n_list.size() == 1 || rep.worst_final_gap <= rep.worst_first_gap);
  return rep;
}

}  // namespace evinc
