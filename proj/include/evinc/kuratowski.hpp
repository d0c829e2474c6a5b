#pragma once

#include <cstddef>
#include <vector>

#include "evinc/errors.hpp"
#include "evinc/vec.hpp"

namespace evinc {

/// Discrete stand-in for sequential set limits of a finite sequence of finite
/// point clouds. `lower` collects points tracked by (essentially) the whole
/// tail of the sequence, `upper` points recurring along a cofinal part.
struct SetSequenceLimits {
  std::vector<Vec> lower;
  std::vector<Vec> upper;
};

/// Finite surrogate of sequential lower/upper set limits with tolerance tol:
/// candidates are a tol-deduplication of all points seen; a candidate enters
/// `lower` when every set in the second half of the sequence has a point
/// within tol of it, and `upper` when at least one such set does. The first
/// half plays the role of the discarded finite prefix, the second half the
/// tail. lower is a subset of upper by construction.
inline SetSequenceLimits kuratowski_limits(const std::vector<std::vector<Vec>>& sets,
                                           double tol) {
  if (sets.empty()) throw InputError("kuratowski_limits: empty sequence");
  if (!(tol > 0.0)) throw InputError("kuratowski_limits: tol must be positive");
  const std::size_t n_sets = sets.size();
  std::size_t dim = 0;
  bool have_dim = false;
  for (const auto& s : sets)
    for (const Vec& p : s) {
      if (!have_dim) {
        dim = p.size();
        have_dim = true;
      } else if (p.size() != dim) {
        throw InputError("kuratowski_limits: inconsistent point dimensions");
      }
    }
  if (!have_dim) throw InputError("kuratowski_limits: all sets empty");

  std::vector<Vec> candidates;
  for (const auto& s : sets)
    for (const Vec& p : s) {
      bool dup = false;
      for (const Vec& c : candidates)
        if (dist2(p, c) <= tol) {
          dup = true;
          break;
        }
      if (!dup) candidates.push_back(p);
    }

  auto set_matches = [&](const Vec& c, const std::vector<Vec>& s) {
    for (const Vec& p : s)
      if (dist2(c, p) <= tol) return true;
    return false;
  };

  const std::size_t tail_start = n_sets / 2;
  SetSequenceLimits out;
  for (const Vec& c : candidates) {
    bool all_tail = true;
    bool any_tail = false;
    for (std::size_t i = tail_start; i < n_sets; ++i) {
      const bool m = set_matches(c, sets[i]);
      all_tail = all_tail && m;
      any_tail = any_tail || m;
      if (!all_tail && any_tail) break;
    }
    if (all_tail) out.lower.push_back(c);
    if (any_tail) out.upper.push_back(c);
  }
  return out;
}

}  // namespace evinc
