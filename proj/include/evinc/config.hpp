#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "evinc/control.hpp"
#include "evinc/errors.hpp"
#include "evinc/multimap.hpp"
#include "evinc/operators.hpp"
#include "evinc/pgconv.hpp"
#include "evinc/sensitivity.hpp"

namespace evinc {

using Json = nlohmann::json;

inline Json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file: " + path.string());
  Json j;
  try {
    in >> j;
  } catch (const Json::parse_error& e) {
    throw InputError("config parse error in " + path.string() + ": " + e.what());
  }
  return j;
}

namespace cfg {

inline const Json& require(const Json& j, const std::string& key, const char* where) {
  if (!j.contains(key))
    throw InputError(std::string(where) + ": missing required field '" + key + "'");
  return j.at(key);
}

inline Vec parse_vec(const Json& j, const char* where) {
  if (!j.is_array()) throw InputError(std::string(where) + ": expected an array");
  Vec v;
  for (const auto& x : j) {
    if (!x.is_number()) throw InputError(std::string(where) + ": expected numbers");
    v.push_back(x.get<double>());
  }
  return v;
}

inline TimeFn parse_time_fn(const Json& j, const char* where) {
  if (j.is_number()) return TimeFn{j.get<double>()};
  if (j.is_object()) return TimeFn{j.value("c0", 0.0), j.value("c1", 0.0)};
  throw InputError(std::string(where) + ": expected a number or {c0, c1}");
}

inline ConvexBody parse_body(const Json& j) {
  const std::string kind = require(j, "kind", "body").get<std::string>();
  if (kind == "point") return ConvexBody::point(parse_vec(require(j, "x", "body"), "body.x"));
  if (kind == "box")
    return ConvexBody::box(parse_vec(require(j, "lo", "body"), "body.lo"),
                           parse_vec(require(j, "hi", "body"), "body.hi"));
  if (kind == "ball")
    return ConvexBody::ball(parse_vec(require(j, "center", "body"), "body.center"),
                            require(j, "radius", "body").get<double>());
  throw InputError("body: unknown kind '" + kind + "'");
}

inline Json body_to_json(const ConvexBody& c) {
  switch (c.kind()) {
    case ConvexBody::Kind::Point:
      return Json{{"kind", "point"}, {"x", c.point_value()}};
    case ConvexBody::Kind::Box:
      return Json{{"kind", "box"}, {"lo", c.lo()}, {"hi", c.hi()}};
    case ConvexBody::Kind::Ball:
      return Json{{"kind", "ball"}, {"center", c.center()}, {"radius", c.radius()}};
  }
  return {};
}

inline HypothesisConstants parse_constants(const Json& j) {
  HypothesisConstants hyp;
  if (j.contains("a1")) hyp.a1 = parse_time_fn(j.at("a1"), "constants.a1");
  hyp.c1 = j.value("c1", 0.0);
  hyp.c2 = j.value("c2", 0.0);
  if (j.contains("a2")) hyp.a2 = parse_time_fn(j.at("a2"), "constants.a2");
  hyp.p = j.value("p", 2.0);
  return hyp;
}

inline Vec load_weight_file(const std::filesystem::path& base,
                            const std::string& rel) {
  const std::filesystem::path path =
      base.empty() ? std::filesystem::path(rel) : base / rel;
  std::ifstream in(path);
  if (!in) throw InputError("cannot open weight file: " + path.string());
  Vec w;
  double v;
  while (in >> v) w.push_back(v);
  if (w.empty()) throw InputError("empty weight file: " + path.string());
  return w;
}

/// Operator spec: {"kind": "zero"|"linear"|"prox"|"power"|"plaplacian", ...};
/// p-laplacian weights may be inline ("weights") or referenced by file path
/// ("weights_file", resolved against the config directory).
inline MonotoneOp parse_operator(const Json& j, const std::filesystem::path& base = {}) {
  const std::string kind = require(j, "kind", "operator").get<std::string>();
  if (kind == "zero") return MonotoneOp::zero(require(j, "dim", "operator").get<std::size_t>());
  if (kind == "linear") {
    const std::size_t dim = require(j, "dim", "operator").get<std::size_t>();
    if (j.contains("gain")) return MonotoneOp::scalar_linear(dim, j.at("gain").get<double>());
    std::vector<double> mat = parse_vec(require(j, "matrix", "operator"), "operator.matrix");
    return MonotoneOp::linear(dim, std::move(mat),
                              parse_constants(require(j, "constants", "operator")));
  }
  if (kind == "prox") {
    std::vector<PwlCoord> coords;
    for (const auto& cj : require(j, "coords", "operator")) {
      PwlCoord c;
      c.breaks = parse_vec(require(cj, "breaks", "prox coord"), "prox.breaks");
      c.slopes = parse_vec(require(cj, "slopes", "prox coord"), "prox.slopes");
      coords.push_back(std::move(c));
    }
    return MonotoneOp::pwl_prox(std::move(coords),
                                parse_constants(require(j, "constants", "operator")));
  }
  if (kind == "power") {
    return MonotoneOp::power(parse_vec(require(j, "weights", "operator"), "power.weights"),
                             parse_vec(require(j, "centers", "operator"), "power.centers"),
                             require(j, "q", "operator").get<double>(),
                             parse_constants(require(j, "constants", "operator")));
  }
  if (kind == "plaplacian") {
    WeightedPLaplacian lap;
    lap.m = require(j, "m", "operator").get<std::size_t>();
    if (j.contains("weights"))
      lap.weights = parse_vec(j.at("weights"), "plaplacian.weights");
    else if (j.contains("weights_file"))
      lap.weights = load_weight_file(base, j.at("weights_file").get<std::string>());
    else if (j.contains("weight_value"))
      lap.weights = Vec(lap.m + 1, j.at("weight_value").get<double>());
    else
      throw InputError("plaplacian: need weights, weights_file or weight_value");
    lap.p = j.value("p", 2.0);
    double w_lo = lap.weights[0], w_hi = lap.weights[0];
    for (double w : lap.weights) {
      w_lo = std::fmin(w_lo, w);
      w_hi = std::fmax(w_hi, w);
    }
    lap.c_lo = j.value("c_lo", w_lo);
    lap.c_hi = j.value("c_hi", w_hi);
    lap.time_slope = j.value("time_slope", 0.0);
    return MonotoneOp::plaplacian(std::move(lap));
  }
  throw InputError("operator: unknown kind '" + kind + "'");
}

inline CoefficientFamily parse_family(const Json& j) {
  const std::string kind = require(j, "kind", "family").get<std::string>();
  const double p = j.value("p", 2.0);
  if (kind == "constant")
    return CoefficientFamily::constant(require(j, "value", "family").get<double>(), p);
  if (kind == "two_phase")
    return CoefficientFamily::two_phase(require(j, "v1", "family").get<double>(),
                                        require(j, "v2", "family").get<double>(),
                                        j.value("split", 0.5), p);
  throw InputError("family: unknown kind '" + kind + "'");
}

inline MultiMap parse_multimap(const Json& j) {
  const std::string kind = require(j, "kind", "multimap").get<std::string>();
  if (kind == "singleton_zero")
    return MultiMap::singleton_zero(require(j, "dim", "multimap").get<std::size_t>());
  if (kind == "constant_body") {
    ConvexBody body = parse_body(require(j, "body", "multimap"));
    const double mag = magnitude(body);
    return MultiMap([body](double, const Vec&, double) { return body; },
                    TimeFn{0.0}, TimeFn{mag}, 0.0);
  }
  if (kind == "constant_point") {
    Vec v = parse_vec(require(j, "value", "multimap"), "multimap.value");
    const double mag = norm2(v);
    return MultiMap([v](double, const Vec&, double) { return ConvexBody::point(v); },
                    TimeFn{0.0}, TimeFn{mag}, 0.0);
  }
  if (kind == "constant_box")
    return MultiMap::constant_box(parse_vec(require(j, "lo", "multimap"), "multimap.lo"),
                                  parse_vec(require(j, "hi", "multimap"), "multimap.hi"));
  if (kind == "tube")
    return MultiMap::tube(require(j, "alpha", "multimap").get<double>(),
                          parse_vec(require(j, "shift", "multimap"), "multimap.shift"),
                          parse_vec(require(j, "halfwidth", "multimap"), "multimap.halfwidth"),
                          j.value("hw_lambda", 0.0), j.value("lambda_mag", 1.0));
  if (kind == "state_ball")
    return MultiMap::state_ball(require(j, "alpha", "multimap").get<double>(),
                                require(j, "radius", "multimap").get<double>());
  throw InputError("multimap: unknown kind '" + kind + "'");
}

inline StateCost parse_state_cost(const Json& j) {
  const std::string kind = require(j, "kind", "cost.L").get<std::string>();
  if (kind == "zero") return StateCost::zero();
  if (kind == "quadratic")
    return StateCost::quadratic(require(j, "weight", "cost.L").get<double>(),
                                parse_vec(require(j, "target", "cost.L"), "cost.L.target"));
  if (kind == "linear_sum")
    return StateCost::linear_sum(require(j, "weight", "cost.L").get<double>());
  throw InputError("cost.L: unknown kind '" + kind + "'");
}

inline ControlCost parse_control_cost(const Json& j) {
  const std::string kind = require(j, "kind", "cost.H").get<std::string>();
  if (kind == "zero") return ControlCost::zero();
  if (kind == "quadratic")
    return ControlCost::quadratic(require(j, "weight", "cost.H").get<double>(),
                                  parse_vec(require(j, "target", "cost.H"), "cost.H.target"));
  throw InputError("cost.H: unknown kind '" + kind + "'");
}

inline TerminalCost parse_terminal_cost(const Json& j) {
  const std::string kind = require(j, "kind", "cost.psi").get<std::string>();
  if (kind == "zero") return TerminalCost::zero();
  if (kind == "linear_sum")
    return TerminalCost::linear_sum(require(j, "weight", "cost.psi").get<double>());
  if (kind == "quadratic")
    return TerminalCost::quadratic(
        require(j, "weight", "cost.psi").get<double>(),
        parse_vec(require(j, "target", "cost.psi"), "cost.psi.target"));
  throw InputError("cost.psi: unknown kind '" + kind + "'");
}

inline ParamSpace parse_param_space(const Json& j) {
  const std::string kind = require(j, "kind", "param_space").get<std::string>();
  if (kind == "interval")
    return ParamSpace::interval(require(j, "lo", "param_space").get<double>(),
                                require(j, "hi", "param_space").get<double>());
  if (kind == "finite") {
    std::vector<std::vector<double>> table;
    if (j.contains("table"))
      for (const auto& row : j.at("table"))
        table.push_back(parse_vec(row, "param_space.table"));
    return ParamSpace::finite(parse_vec(require(j, "values", "param_space"),
                                        "param_space.values"),
                              std::move(table));
  }
  throw InputError("param_space: unknown kind '" + kind + "'");
}

inline TimeGrid parse_grid(const Json& j) {
  if (j.contains("nodes")) return TimeGrid(parse_vec(j.at("nodes"), "grid.nodes"));
  return TimeGrid::uniform(require(j, "b", "grid").get<double>(),
                           require(j, "n", "grid").get<std::size_t>());
}

/// Operator family: a fixed operator or the oscillating-coefficient family
/// (lambda = 0 selects the homogenized limit, lambda = 1/n member n).
inline std::function<MonotoneOp(double)> parse_op_family(
    const Json& j, const std::filesystem::path& base = {}) {
  const std::string kind = require(j, "kind", "operator_family").get<std::string>();
  if (kind == "fixed") {
    const MonotoneOp op = parse_operator(require(j, "operator", "operator_family"), base);
    return [op](double) { return op; };
  }
  if (kind == "plap_oscillating") {
    const CoefficientFamily fam = parse_family(require(j, "family", "operator_family"));
    const std::size_t m = require(j, "m", "operator_family").get<std::size_t>();
    return [fam, m](double lambda) {
      if (lambda <= 0.0) return MonotoneOp::plaplacian(homogenized_limit(fam, m));
      const int n = static_cast<int>(std::lround(1.0 / lambda));
      return MonotoneOp::plaplacian(fam.member(std::max(1, n), m));
    };
  }
  throw InputError("operator_family: unknown kind '" + kind + "'");
}

inline ControlProblem parse_problem(const Json& j, const std::filesystem::path& base = {}) {
  ControlProblem prob;
  if (j.contains("operator_family"))
    prob.op_family = parse_op_family(j.at("operator_family"), base);
  else if (j.contains("operator")) {
    const MonotoneOp op = parse_operator(j.at("operator"), base);
    prob.op_family = [op](double) { return op; };
  } else {
    throw InputError("problem: need operator or operator_family");
  }
  prob.F = parse_multimap(require(j, "multimap", "problem"));
  if (j.contains("control")) {
    const Json& c = j.at("control");
    if (c.contains("g")) prob.g_base = parse_time_fn(c.at("g"), "control.g");
    prob.g_lambda = c.value("g_lambda", 0.0);
    prob.g_bound = c.value("g_bound", 1.0);
    if (c.contains("radius")) prob.r_base = parse_time_fn(c.at("radius"), "control.radius");
    prob.r_lambda = c.value("radius_lambda", 0.0);
  }
  if (j.contains("cost")) {
    const Json& c = j.at("cost");
    if (c.contains("L")) prob.L = parse_state_cost(c.at("L"));
    if (c.contains("H")) prob.H = parse_control_cost(c.at("H"));
    if (c.contains("psi")) prob.psi = parse_terminal_cost(c.at("psi"));
  }
  if (j.contains("param_space")) prob.E = parse_param_space(j.at("param_space"));
  prob.p = j.value("p", 2.0);
  prob.grid = parse_grid(require(j, "grid", "problem"));
  if (j.contains("solver")) {
    prob.solver.resolvent_tol = j.at("solver").value("tol", 1e-10);
    prob.solver.resolvent_cap = j.at("solver").value("cap", 200);
  }
  return prob;
}

/// Per-node forcing from a config value: "zero", {"constant": [...]}, or an
/// explicit array of per-node vectors.
inline std::vector<Vec> parse_forcing(const Json& j, const TimeGrid& grid, std::size_t dim) {
  if (j.is_string() && j.get<std::string>() == "zero")
    return std::vector<Vec>(grid.nodes(), zeros(dim));
  if (j.is_object() && j.contains("constant")) {
    Vec v = parse_vec(j.at("constant"), "forcing.constant");
    check_dim(v, dim, "forcing.constant");
    return std::vector<Vec>(grid.nodes(), v);
  }
  if (j.is_object() && j.contains("sine_modes")) {
    // sum of sine profiles in space, constant in time
    Vec v = zeros(dim);
    const double dz = 1.0 / static_cast<double>(dim + 1);
    std::size_t idx = 0;
    for (const auto& amp : j.at("sine_modes")) {
      ++idx;
      for (std::size_t i = 0; i < dim; ++i)
        v[i] += amp.get<double>() * std::sin(static_cast<double>(idx) * M_PI * (i + 1) * dz);
    }
    return std::vector<Vec>(grid.nodes(), v);
  }
  if (j.is_array()) {
    std::vector<Vec> f;
    for (const auto& row : j) f.push_back(parse_vec(row, "forcing"));
    if (f.size() != grid.nodes())
      throw InputError("forcing: need one vector per grid node");
    for (const Vec& v : f) check_dim(v, dim, "forcing");
    return f;
  }
  throw InputError("forcing: expected \"zero\", {constant}, {sine_modes} or an array");
}

inline SequencePoint parse_sequence_point(const Json& j) {
  return SequencePoint{parse_vec(require(j, "xi", "sequence point"), "point.xi"),
                       j.value("lambda", 0.0)};
}

}  // namespace cfg

}  // namespace evinc
