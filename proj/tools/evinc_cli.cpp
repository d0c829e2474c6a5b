// Batch front end: load a problem config, run one command, emit CSV plus a
// run-metadata JSON. Exit codes: 0 success, 1 config/validation error,
// 2 numerical failure, 3 harness (PASS/FAIL) failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evinc/config.hpp"
#include "evinc/io.hpp"

namespace fs = std::filesystem;
using namespace evinc;

namespace {

struct CommonArgs {
  std::string config;
  std::string out;
  long long seed = -1;    // -1: take from config (default 0)
  long long budget = -1;  // -1: take from config (default 5000)
  long long grid_n = -1;  // -1: keep the config grid
  double tol = -1.0;      // -1: keep the config solver tolerance
  bool verbose = false;
};

struct RunContext {
  Json cfg;
  fs::path out_dir;
  fs::path config_dir;
  std::uint64_t seed = 0;
  long budget = 5000;
  long grid_n = -1;
  double tol = -1.0;
  bool verbose = false;

  Json metadata;
  std::vector<std::string> outputs;

  void note(const std::string& msg) const {
    if (verbose) std::cerr << "[evinc] " << msg << "\n";
  }

  void write_output(const std::string& name, const std::string& content) {
    atomic_write(out_dir / name, content);
    outputs.push_back(name);
  }

  void finish(const std::string& command) {
    metadata["command"] = command;
    metadata["seed"] = seed;
    metadata["budget"] = budget;
    if (grid_n > 0) metadata["grid_n"] = grid_n;
    if (tol > 0.0) metadata["resolvent_tol"] = tol;
    metadata["outputs"] = outputs;
    atomic_write(out_dir / "run_metadata.json", metadata.dump(2) + "\n");
  }
};

RunContext make_context(const CommonArgs& args, const char* command_key) {
  RunContext ctx;
  ctx.cfg = load_json_file(args.config);
  ctx.out_dir = args.out;
  ctx.config_dir = fs::path(args.config).parent_path();
  ctx.verbose = args.verbose;
  const Json section = ctx.cfg.value(command_key, Json::object());
  ctx.seed = args.seed >= 0 ? static_cast<std::uint64_t>(args.seed)
                            : section.value("seed", std::uint64_t{0});
  ctx.budget = args.budget >= 0 ? static_cast<long>(args.budget)
                                : section.value("budget", 5000L);
  ctx.grid_n = static_cast<long>(args.grid_n);
  ctx.tol = args.tol;
  ctx.metadata["config"] = fs::absolute(args.config).string();
  return ctx;
}

ControlProblem load_problem(RunContext& ctx) {
  ControlProblem prob =
      cfg::parse_problem(cfg::require(ctx.cfg, "problem", "config"), ctx.config_dir);
  if (ctx.grid_n > 0)
    prob.grid = TimeGrid::uniform(prob.grid.horizon(), static_cast<std::size_t>(ctx.grid_n));
  if (ctx.tol > 0.0) prob.solver.resolvent_tol = ctx.tol;
  return prob;
}

int cmd_solve(const CommonArgs& args) {
  RunContext ctx = make_context(args, "solve");
  ControlProblem prob = load_problem(ctx);
  const Json& section = cfg::require(ctx.cfg, "solve", "config");
  const Vec xi = cfg::parse_vec(cfg::require(section, "xi", "solve"), "solve.xi");
  const double lambda = section.value("lambda", 0.0);
  const MonotoneOp A = prob.op(lambda);
  const std::vector<Vec> forcing =
      cfg::parse_forcing(section.value("forcing", Json("zero")), prob.grid, A.dim());
  const Trajectory x = solve_forced(A, forcing, xi, prob.grid, prob.solver);
  ctx.write_output("trajectory.csv", trajectory_csv(x, &forcing));
  ctx.metadata["lambda"] = lambda;
  ctx.finish("solve");
  return 0;
}

int cmd_sample_set(const CommonArgs& args) {
  RunContext ctx = make_context(args, "sample_set");
  ControlProblem prob = load_problem(ctx);
  const Json& section = cfg::require(ctx.cfg, "sample_set", "config");
  const Vec xi = cfg::parse_vec(cfg::require(section, "xi", "sample_set"), "sample_set.xi");
  const double lambda = section.value("lambda", 0.0);
  const auto strategy =
      selection_strategy_from_string(section.value("strategy", std::string("random-extreme")));
  const std::size_t count = section.value("count", std::size_t{16});
  const MonotoneOp A = prob.op(lambda);
  const auto samples = sample_solution_set(A, prob.F, xi, lambda, prob.grid, strategy,
                                           count, ctx.seed, prob.solver);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "sample_%04zu.csv", i);
    ctx.write_output(name, trajectory_csv(samples[i].state, &samples[i].selection));
  }
  ctx.metadata["count"] = count;
  ctx.metadata["lambda"] = lambda;
  ctx.finish("sample-set");
  return 0;
}

int cmd_filippov(const CommonArgs& args) {
  RunContext ctx = make_context(args, "filippov");
  ControlProblem prob = load_problem(ctx);
  const Json& section = cfg::require(ctx.cfg, "filippov", "config");
  const Vec xi = cfg::parse_vec(cfg::require(section, "xi", "filippov"), "filippov.xi");
  const double lambda = section.value("lambda", 0.0);
  const double epsilon = section.value("epsilon", 1e-8);
  const MonotoneOp A = prob.op(lambda);
  const std::vector<Vec> forcing = cfg::parse_forcing(
      cfg::require(section, "reference_forcing", "filippov"), prob.grid, A.dim());
  const Trajectory reference = solve_forced(A, forcing, xi, prob.grid, prob.solver);

  FilippovOptions fopt;
  fopt.solver = prob.solver;
  fopt.allowance = section.value("allowance", 0.0);
  Vec xi_construct;
  const Vec* xi_ptr = nullptr;
  if (section.contains("construct_xi")) {
    xi_construct = cfg::parse_vec(section.at("construct_xi"), "filippov.construct_xi");
    xi_ptr = &xi_construct;
  }
  const FilippovResult res =
      filippov_construct(A, prob.F, reference, forcing, lambda, epsilon, fopt, xi_ptr);
  ctx.write_output("trajectory.csv", trajectory_csv(res.trajectory, &res.selection));
  ctx.write_output("certificate.csv", certificate_csv(prob.grid, res.certificate));
  ctx.metadata["epsilon"] = epsilon;
  ctx.metadata["iterations"] = res.certificate.iterations;
  ctx.metadata["pass"] = res.certificate.all_pass();
  ctx.finish("filippov");
  return res.certificate.all_pass() ? 0 : 3;
}

int cmd_optimize(const CommonArgs& args) {
  RunContext ctx = make_context(args, "optimize");
  ControlProblem prob = load_problem(ctx);
  const Json& section = cfg::require(ctx.cfg, "optimize", "config");
  const Vec xi = cfg::parse_vec(cfg::require(section, "xi", "optimize"), "optimize.xi");
  const double lambda = section.value("lambda", 0.0);
  const OptimizeResult res = optimize(prob, xi, lambda, ctx.budget, ctx.seed);
  ctx.write_output("pair.csv",
                   trajectory_csv(res.pair.state, &res.pair.selection, &res.pair.control));
  ctx.metadata["m_hat"] = format_double(res.value);
  ctx.metadata["converged"] = res.converged;
  ctx.metadata["evals"] = res.evals;
  ctx.metadata["lambda"] = lambda;
  ctx.finish("optimize");
  return 0;
}

int cmd_sweep(const CommonArgs& args) {
  RunContext ctx = make_context(args, "sweep");
  ControlProblem prob = load_problem(ctx);
  const Json& section = cfg::require(ctx.cfg, "sweep", "config");
  std::vector<Vec> xi_grid;
  for (const auto& row : cfg::require(section, "xi_grid", "sweep"))
    xi_grid.push_back(cfg::parse_vec(row, "sweep.xi_grid"));
  std::vector<double> lambda_grid;
  for (const auto& v : cfg::require(section, "lambda_grid", "sweep"))
    lambda_grid.push_back(v.get<double>());
  const ValueSurface s = sweep_value(prob, xi_grid, lambda_grid, ctx.budget, ctx.seed);
  ctx.write_output("surface.csv", surface_csv(s));
  int failures = 0;
  for (const auto& e : s.entries) failures += e.ok ? 0 : 1;
  ctx.metadata["points"] = s.entries.size();
  ctx.metadata["failed_points"] = failures;
  ctx.finish("sweep");
  return 0;
}

int cmd_continuity(const CommonArgs& args) {
  RunContext ctx = make_context(args, "continuity");
  ControlProblem prob = load_problem(ctx);
  const Json& section = cfg::require(ctx.cfg, "continuity", "config");
  const SequencePoint target =
      cfg::parse_sequence_point(cfg::require(section, "target", "continuity"));
  std::vector<SequencePoint> seq;
  for (const auto& q : cfg::require(section, "sequence", "continuity"))
    seq.push_back(cfg::parse_sequence_point(q));
  const double tol_scale = section.value("tol_scale", 5e-3);
  const SequenceReport rep =
      continuity_report(prob, target, seq, ctx.budget, ctx.seed, tol_scale);
  ctx.write_output("sequence.csv", sequence_csv(rep));
  ctx.metadata["target_value"] = format_double(rep.target_value);
  ctx.metadata["tol"] = rep.tol;
  ctx.metadata["pass"] = rep.pass;
  ctx.finish("continuity");
  return rep.pass ? 0 : 3;
}

int cmd_usc(const CommonArgs& args) {
  RunContext ctx = make_context(args, "usc");
  ControlProblem prob = load_problem(ctx);
  const Json& section = cfg::require(ctx.cfg, "usc", "config");
  const SequencePoint target =
      cfg::parse_sequence_point(cfg::require(section, "target", "usc"));
  std::vector<SequencePoint> seq;
  for (const auto& q : cfg::require(section, "sequence", "usc"))
    seq.push_back(cfg::parse_sequence_point(q));
  const int count = section.value("count", 4);
  const double gap = section.value("gap", 1e-3);
  const double tol = section.value("tol", 1e-1);
  const SequenceReport rep =
      usc_report(prob, target, seq, ctx.budget, count, gap, ctx.seed, tol);
  ctx.write_output("sequence.csv", sequence_csv(rep));
  Json rev = Json::array();
  for (double v : rep.reverse_e_n) rev.push_back(format_double(v));
  ctx.metadata["reverse_e_n"] = rev;
  ctx.metadata["pass"] = rep.pass;
  ctx.finish("usc");
  return rep.pass ? 0 : 3;
}

int cmd_qliminf(const CommonArgs& args) {
  RunContext ctx = make_context(args, "qliminf");
  ControlProblem prob = load_problem(ctx);
  const Json& section = cfg::require(ctx.cfg, "qliminf", "config");
  const SequencePoint target =
      cfg::parse_sequence_point(cfg::require(section, "target", "qliminf"));
  std::vector<SequencePoint> seq;
  for (const auto& q : cfg::require(section, "sequence", "qliminf"))
    seq.push_back(cfg::parse_sequence_point(q));
  const double epsilon = section.value("epsilon", 1e-8);
  const double adm_tol = section.value("admissible_tol", 1e-5);

  const OptimizeResult target_res =
      optimize(prob, target.xi, target.lambda, ctx.budget, ctx.seed);
  const auto entries =
      q_liminf_construct(prob, target_res.pair, target, seq, epsilon, adm_tol);

  std::ostringstream summary;
  summary << "n,dist,state_gap,control_gap,cert_bound,projection_displacement,"
             "admissible,cert_pass\n";
  bool all_ok = true;
  for (std::size_t n = 0; n < entries.size(); ++n) {
    const auto& e = entries[n];
    const double dist = dist2(seq[n].xi, target.xi) +
                        prob.E.metric(seq[n].lambda, target.lambda);
    summary << (n + 1) << "," << format_double(dist) << ","
            << format_double(e.state_gap) << "," << format_double(e.control_gap) << ","
            << format_double(e.cert_bound) << ","
            << format_double(e.projection_displacement) << ","
            << (e.admissible ? "true" : "false") << ","
            << (e.cert_pass ? "true" : "false") << "\n";
    char name[64];
    std::snprintf(name, sizeof(name), "pair_%03zu.csv", n + 1);
    ctx.write_output(name, trajectory_csv(e.pair.state, &e.pair.selection, &e.pair.control));
    all_ok = all_ok && e.admissible && e.cert_pass;
  }
  ctx.write_output("summary.csv", summary.str());
  ctx.metadata["target_value"] = format_double(target_res.value);
  ctx.metadata["pass"] = all_ok;
  ctx.finish("qliminf");
  return all_ok ? 0 : 3;
}

int cmd_pgconv(const CommonArgs& args) {
  RunContext ctx = make_context(args, "pgconv");
  const Json& section = cfg::require(ctx.cfg, "pgconv", "config");
  const CoefficientFamily family =
      cfg::parse_family(cfg::require(section, "family", "pgconv"));
  const std::size_t m = cfg::require(section, "m", "pgconv").get<std::size_t>();
  TimeGrid grid = cfg::parse_grid(cfg::require(section, "grid", "pgconv"));
  if (ctx.grid_n > 0)
    grid = TimeGrid::uniform(grid.horizon(), static_cast<std::size_t>(ctx.grid_n));
  const std::vector<Vec> h =
      cfg::parse_forcing(cfg::require(section, "forcing", "pgconv"), grid, m);
  Vec xi = zeros(m);
  if (section.contains("xi")) xi = cfg::parse_vec(section.at("xi"), "pgconv.xi");
  std::vector<int> n_list;
  for (const auto& v : cfg::require(section, "n_list", "pgconv"))
    n_list.push_back(v.get<int>());
  const double tol = section.value("tol", 1e-2);
  const auto functionals = default_test_functionals(
      m, grid, section.value("modes", 5), section.value("windows", 3));
  SolverOptions solver;
  const PGReport rep =
      run_pg_experiment(family, h, xi, grid, n_list, functionals, tol, solver);
  ctx.write_output("pg.csv", pg_csv(rep));
  Json gnorms = Json::array();
  for (double v : rep.gradient_norms) gnorms.push_back(format_double(v));
  ctx.metadata["gradient_norms"] = gnorms;
  ctx.metadata["limit_gradient_norm"] = format_double(rep.limit_gradient_norm);
  ctx.metadata["a_hom"] = format_double(homogenized_coefficient(family));
  ctx.metadata["worst_first_gap"] = format_double(rep.worst_first_gap);
  ctx.metadata["worst_final_gap"] = format_double(rep.worst_final_gap);
  ctx.metadata["pass"] = rep.pass;
  ctx.finish("pgconv");
  return rep.pass ? 0 : 3;
}

int cmd_validate(const CommonArgs& args) {
  RunContext ctx = make_context(args, "validate");
  ControlProblem prob = load_problem(ctx);
  const Json section = ctx.cfg.value("validate", Json::object());
  const double lambda = section.value("lambda", prob.sample_lambda());
  const int samples = section.value("samples", 500);
  const MonotoneOp A = prob.op(lambda);

  Json report;
  bool all_pass = true;

  const HypothesisReport op_rep =
      validate_hypotheses(A, samples, prob.grid.horizon(), mix_seed(ctx.seed, 1));
  report["operator"] = {{"rejected", op_rep.rejected},
                        {"reject_reason", op_rep.reject_reason},
                        {"monotonicity_margin", op_rep.monotonicity_margin},
                        {"growth_margin", op_rep.growth_margin},
                        {"coercivity_margin", op_rep.coercivity_margin},
                        {"pass", op_rep.pass}};
  all_pass = all_pass && op_rep.pass;

  double lam_lo = 0.0, lam_hi = 1.0;
  if (prob.E.kind == ParamSpace::Kind::Interval) {
    lam_lo = prob.E.lo;
    lam_hi = prob.E.hi;
  } else {
    lam_lo = lam_hi = prob.E.values.front();
    for (double v : prob.E.values) {
      lam_lo = std::fmin(lam_lo, v);
      lam_hi = std::fmax(lam_hi, v);
    }
  }
  const MultiMapReport fm = validate_multimap(prob.F, A.dim(), samples, prob.grid.horizon(),
                                              lam_lo, lam_hi, mix_seed(ctx.seed, 2));
  report["multimap"] = {{"lipschitz_margin", fm.lipschitz_margin},
                        {"growth_margin", fm.growth_margin},
                        {"param_margin", fm.param_margin},
                        {"pass", fm.pass}};
  all_pass = all_pass && fm.pass;

  // smallness of the perturbation against the operator coercivity
  const double beta = ctx.cfg.value("beta", 1.0);
  bool small_ok = true;
  std::string small_note = "not binding (c3 = 0)";
  if (prob.F.c3() > 0.0) {
    if (A.constants().c2 > 0.0) {
      small_ok = smallness_check(A.constants().c2, prob.F.c3(), beta, A.constants().p);
      small_note = small_ok ? "holds" : "violated";
    } else {
      small_ok = false;
      small_note = "not checkable: operator coercivity c2 is not positive";
    }
  }
  report["smallness"] = {{"beta", beta}, {"pass", small_ok}, {"note", small_note}};
  all_pass = all_pass && small_ok;

  // control bundle: H convexity, multiplier bound, radius nonnegativity
  Rng rng(mix_seed(ctx.seed, 3));
  double conv_violation = 0.0, g_violation = 0.0, r_violation = 0.0;
  for (int s = 0; s < samples; ++s) {
    const double t = rng.uniform(0.0, prob.grid.horizon());
    const double lam = rng.uniform(lam_lo, lam_hi);
    const Vec u1 = rng.ball_vec(A.dim(), 2.0);
    const Vec u2 = rng.ball_vec(A.dim(), 2.0);
    Vec mid = add(Vec(u1), u2);
    mid = scale(0.5, std::move(mid));
    conv_violation = std::fmax(
        conv_violation, prob.H.eval(t, mid, lam) - 0.5 * (prob.H.eval(t, u1, lam) +
                                                          prob.H.eval(t, u2, lam)));
    g_violation = std::fmax(g_violation, std::fabs(prob.g(t, lam)) - prob.g_bound);
    r_violation = std::fmax(r_violation, -prob.radius(t, lam));
  }
  const bool bundle_pass =
      conv_violation <= 1e-9 && g_violation <= 1e-12 && r_violation <= 0.0;
  report["control_bundle"] = {{"H_midpoint_violation", conv_violation},
                              {"g_bound_violation", g_violation},
                              {"radius_violation", r_violation},
                              {"pass", bundle_pass}};
  all_pass = all_pass && bundle_pass;

  report["pass"] = all_pass;
  ctx.write_output("validate.json", report.dump(2) + "\n");
  ctx.metadata["pass"] = all_pass;
  ctx.finish("validate");
  return all_pass ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evinc: evolution-inclusion optimal control toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", args.config, "problem/run config (JSON)")->required();
    sub->add_option("-o,--out", args.out, "output directory")->required();
    sub->add_option("-s,--seed", args.seed, "seed override");
    sub->add_option("-b,--budget", args.budget, "budget override");
    sub->add_option("-n,--grid-n", args.grid_n, "uniform grid step-count override");
    sub->add_option("-t,--tol", args.tol, "resolvent tolerance override");
    sub->add_flag("-v,--verbose", args.verbose, "diagnostics to stderr");
  };

  struct Cmd {
    const char* name;
    const char* help;
    int (*run)(const CommonArgs&);
  };
  const Cmd cmds[] = {
      {"solve", "implicit-Euler solve with a fixed forcing", cmd_solve},
      {"sample-set", "sample the inclusion's solution set", cmd_sample_set},
      {"filippov", "successive approximation with error certificate", cmd_filippov},
      {"optimize", "direct-method optimal control", cmd_optimize},
      {"sweep", "value function over a (xi, lambda) grid", cmd_sweep},
      {"continuity", "value gaps along a convergent sequence", cmd_continuity},
      {"usc", "optimal-set distances along a convergent sequence", cmd_usc},
      {"qliminf", "rebuild admissible pairs at perturbed data", cmd_qliminf},
      {"pgconv", "oscillating-coefficient convergence experiment", cmd_pgconv},
      {"validate", "hypothesis checks for a problem config", cmd_validate},
  };
  for (const Cmd& c : cmds) add_common(app.add_subcommand(c.name, c.help));

  CLI11_PARSE(app, argc, argv);

  try {
    for (const Cmd& c : cmds)
      if (app.get_subcommand(c.name)->parsed()) return c.run(args);
    std::cerr << "no command selected\n";
    return 1;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const ConvergenceError& e) {
    std::cerr << "convergence failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 2;
  }
}
