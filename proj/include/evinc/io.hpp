#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "evinc/control.hpp"
#include "evinc/errors.hpp"
#include "evinc/filippov.hpp"
#include "evinc/grid.hpp"
#include "evinc/pgconv.hpp"
#include "evinc/sensitivity.hpp"
#include "evinc/vec.hpp"

namespace evinc {

/// 17 significant digits: doubles round-trip exactly, so equal runs produce
/// byte-identical files.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Write via a temp file in the same directory plus rename.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("atomic_write: cannot open " + tmp.string());
    out << content;
    if (!out) throw InputError("atomic_write: write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline std::string trajectory_csv(const Trajectory& x,
                                  const std::vector<Vec>* forcing = nullptr,
                                  const std::vector<Vec>* control = nullptr) {
  std::ostringstream out;
  const std::size_t n = x.dim();
  out << "t";
  for (std::size_t i = 0; i < n; ++i) out << ",x_" << i;
  if (control)
    for (std::size_t i = 0; i < control->front().size(); ++i) out << ",u_" << i;
  if (forcing)
    for (std::size_t i = 0; i < n; ++i) out << ",f_" << i;
  out << "\n";
  for (std::size_t k = 0; k < x.grid.nodes(); ++k) {
    out << format_double(x.grid.t(k));
    for (std::size_t i = 0; i < n; ++i) out << "," << format_double(x.states[k][i]);
    if (control)
      for (double v : (*control)[k]) out << "," << format_double(v);
    if (forcing)
      for (std::size_t i = 0; i < n; ++i) out << "," << format_double((*forcing)[k][i]);
    out << "\n";
  }
  return out.str();
}

inline std::string certificate_csv(const TimeGrid& grid, const FilippovCertificate& c) {
  std::ostringstream out;
  out << "t,tau,defect,bound,deviation,pass\n";
  for (std::size_t k = 0; k < grid.nodes(); ++k) {
    out << format_double(grid.t(k)) << "," << format_double(c.tau[k]) << ","
        << format_double(c.defect[k]) << "," << format_double(c.bound[k]) << ","
        << format_double(c.deviation[k]) << "," << (c.node_pass[k] ? "true" : "false")
        << "\n";
  }
  return out.str();
}

inline std::string surface_csv(const ValueSurface& s) {
  std::ostringstream out;
  const std::size_t dim = s.entries.empty() ? 0 : s.entries.front().xi.size();
  for (std::size_t i = 0; i < dim; ++i) out << "xi_" << i << ",";
  out << "lambda,m_hat,budget,seed\n";
  for (const auto& e : s.entries) {
    for (double v : e.xi) out << format_double(v) << ",";
    out << format_double(e.lambda) << "," << (e.ok ? format_double(e.m_hat) : "failed")
        << "," << s.budget << "," << e.seed << "\n";
  }
  return out.str();
}

inline std::string sequence_csv(const SequenceReport& rep) {
  std::ostringstream out;
  out << "n,dist,value_gap,e_n,pass\n";
  for (std::size_t n = 0; n < rep.dist.size(); ++n) {
    out << (n + 1) << "," << format_double(rep.dist[n]) << ","
        << format_double(rep.value_gap[n]) << ",";
    if (n < rep.e_n.size()) out << format_double(rep.e_n[n]);
    out << "," << (rep.pass ? "true" : "false") << "\n";
  }
  return out.str();
}

inline std::string pg_csv(const PGReport& rep) {
  std::ostringstream out;
  out << "n,functional_id,pairing,limit_pairing,gap\n";
  for (const auto& e : rep.entries) {
    out << e.n << "," << e.functional_id << "," << format_double(e.pairing) << ","
        << format_double(e.limit_pairing) << "," << format_double(e.gap) << "\n";
  }
  return out.str();
}

}  // namespace evinc
