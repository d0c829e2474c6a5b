#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "evinc/config.hpp"
#include "evinc/io.hpp"

namespace fs = std::filesystem;
using namespace evinc;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

long data_rows(const std::string& csv) {
  long rows = -1;  // skip the header
  for (char c : csv)
    if (c == '\n') ++rows;
  return rows;
}

}  // namespace

TEST_CASE("convex body JSON round trip") {
  Rng rng(4);
  for (int rep = 0; rep < 30; ++rep) {
    ConvexBody c = rep % 3 == 0
                       ? ConvexBody::point(rng.uniform_vec(2, -2.0, 2.0))
                       : rep % 3 == 1
                             ? ConvexBody::box({-1.0, 0.0}, {0.5, 2.0})
                             : ConvexBody::ball(rng.uniform_vec(2, -1.0, 1.0), 0.7);
    const Json j = cfg::body_to_json(c);
    const ConvexBody back = cfg::parse_body(j);
    CHECK(back.same_representation(c, 0.0));
  }
  CHECK_THROWS_AS(cfg::parse_body(Json{{"kind", "simplex"}}), InputError);
}

TEST_CASE("time function parsing") {
  CHECK(cfg::parse_time_fn(Json(2.5), "t")(0.7) == 2.5);
  const TimeFn f = cfg::parse_time_fn(Json{{"c0", 1.0}, {"c1", 2.0}}, "t");
  CHECK(f(2.0) == 5.0);
  CHECK_THROWS_AS(cfg::parse_time_fn(Json("x"), "t"), InputError);
}

TEST_CASE("operator parsing") {
  const MonotoneOp lin =
      cfg::parse_operator(Json{{"kind", "linear"}, {"dim", 2}, {"gain", 1.5}});
  CHECK(lin.dim() == 2);
  CHECK(lin.value(0.0, {1.0, 2.0}).point_value() == Vec{1.5, 3.0});

  SECTION("p-laplacian weights from a file") {
    const fs::path dir = fs::temp_directory_path() / "evinc_cfg_test";
    fs::create_directories(dir);
    {
      std::ofstream w(dir / "weights.txt");
      for (int i = 0; i < 6; ++i) w << 1.0 + 0.1 * i << "\n";
    }
    const Json j{{"kind", "plaplacian"}, {"m", 5}, {"weights_file", "weights.txt"},
                 {"p", 2.0}};
    const MonotoneOp op = cfg::parse_operator(j, dir);
    CHECK(op.dim() == 5);
    CHECK(op.plap().weights[5] == Catch::Approx(1.5));
  }

  CHECK_THROWS_AS(cfg::parse_operator(Json{{"kind", "spectral"}}), InputError);
  CHECK_THROWS_AS(cfg::parse_operator(Json{{"kind", "plaplacian"}, {"m", 4}}), InputError);
}

TEST_CASE("problem parsing wires every block") {
  const Json j = {
      {"operator", {{"kind", "linear"}, {"dim", 1}, {"gain", 1.0}}},
      {"multimap", {{"kind", "constant_box"}, {"lo", {-0.5}}, {"hi", {0.5}}}},
      {"control",
       {{"g", -1.0}, {"g_bound", 1.0}, {"radius", 2.0}, {"radius_lambda", -0.5}}},
      {"cost",
       {{"L", {{"kind", "quadratic"}, {"weight", 1.0}, {"target", {0.0}}}},
        {"H", {{"kind", "zero"}}},
        {"psi", {{"kind", "linear_sum"}, {"weight", 2.0}}}}},
      {"param_space", {{"kind", "finite"}, {"values", {0.0, 0.5, 1.0}}}},
      {"grid", {{"b", 2.0}, {"n", 40}}},
      {"solver", {{"tol", 1e-11}, {"cap", 150}}}};
  const ControlProblem prob = cfg::parse_problem(j);
  CHECK(prob.grid.horizon() == 2.0);
  CHECK(prob.grid.steps() == 40);
  CHECK(prob.g(0.3, 0.0) == -1.0);
  CHECK(prob.radius(0.0, 1.0) == Catch::Approx(1.5));
  CHECK(prob.solver.resolvent_tol == 1e-11);
  CHECK(prob.E.metric(0.0, 1.0) == 1.0);
  CHECK(prob.psi.eval({0.0}, {3.0}, 0.0) == 6.0);
  const ConvexBody f = prob.F(0.0, {7.0}, 0.0);
  CHECK(f.lo()[0] == -0.5);
}

TEST_CASE("multimap parsing: constant body and oscillating operator family") {
  const MultiMap f = cfg::parse_multimap(
      Json{{"kind", "constant_body"},
           {"body", {{"kind", "ball"}, {"center", {0.0, 0.0}}, {"radius", 0.5}}}});
  const ConvexBody v = f(0.3, {9.0, 9.0}, 0.7);
  CHECK(v.kind() == ConvexBody::Kind::Ball);
  CHECK(v.radius() == 0.5);
  CHECK(f.a3()(0.0) == Catch::Approx(0.5));

  const Json fam_j = {{"kind", "plap_oscillating"},
                      {"family",
                       {{"kind", "two_phase"}, {"v1", 1.0}, {"v2", 4.0}, {"split", 0.5}}},
                      {"m", 20}};
  const auto family = cfg::parse_op_family(fam_j);
  const MonotoneOp hom = family(0.0);
  CHECK(hom.plap().weights[0] == Catch::Approx(1.6));  // harmonic mean
  const MonotoneOp member4 = family(0.25);
  bool saw_low = false, saw_high = false;
  for (double w : member4.plap().weights) {
    saw_low = saw_low || w == 1.0;
    saw_high = saw_high || w == 4.0;
  }
  CHECK(saw_low);
  CHECK(saw_high);
}

TEST_CASE("finite parameter space with a distance table") {
  const ParamSpace e = ParamSpace::finite({0.0, 1.0}, {{0.0, 3.0}, {3.0, 0.0}});
  CHECK(e.metric(0.0, 1.0) == 3.0);
  CHECK_THROWS_AS(e.metric(0.0, 0.7), InputError);
}

TEST_CASE("forcing parsing") {
  const TimeGrid grid = TimeGrid::uniform(1.0, 4);
  const auto zero = cfg::parse_forcing(Json("zero"), grid, 2);
  CHECK(zero.size() == 5);
  CHECK(norm2(zero[3]) == 0.0);
  const auto c = cfg::parse_forcing(Json{{"constant", {1.0, -1.0}}}, grid, 2);
  CHECK(c[2] == Vec{1.0, -1.0});
  const auto rows = cfg::parse_forcing(Json::parse("[[0],[1],[2],[3],[4]]"), grid, 1);
  CHECK(rows[4][0] == 4.0);
  CHECK_THROWS_AS(cfg::parse_forcing(Json::parse("[[0],[1]]"), grid, 1), InputError);
  CHECK_THROWS_AS(cfg::parse_forcing(Json("sine"), grid, 1), InputError);
}

TEST_CASE("csv formats") {
  const TimeGrid grid = TimeGrid::uniform(1.0, 2);
  const Trajectory x(grid, {{0.5}, {0.25}, {0.125}});
  const std::vector<Vec> f(3, Vec{1.0});

  SECTION("trajectory header and row count") {
    const std::string csv = trajectory_csv(x, &f);
    CHECK(csv.rfind("t,x_0,f_0\n", 0) == 0);
    CHECK(data_rows(csv) == 3);
  }

  SECTION("17 significant digits round-trip") {
    const double v = 0.1234567890123456789;
    CHECK(std::stod(format_double(v)) == v);
    const std::string csv = trajectory_csv(x);
    CHECK(csv.find("0.125") != std::string::npos);
  }

  SECTION("certificate csv") {
    FilippovCertificate cert;
    cert.tau = {0.0, 0.5, 1.0};
    cert.defect = {0.0, 0.1, 0.2};
    cert.bound = {0.0, 1.0, 2.0};
    cert.deviation = {0.0, 0.5, 1.5};
    cert.node_pass = {true, true, true};
    const std::string csv = certificate_csv(grid, cert);
    CHECK(csv.rfind("t,tau,defect,bound,deviation,pass\n", 0) == 0);
    CHECK(data_rows(csv) == 3);
    CHECK(csv.find("true") != std::string::npos);
  }
}

TEST_CASE("atomic_write replaces content") {
  const fs::path dir = fs::temp_directory_path() / "evinc_io_test";
  fs::remove_all(dir);
  atomic_write(dir / "a.txt", "first");
  CHECK(slurp(dir / "a.txt") == "first");
  atomic_write(dir / "a.txt", "second");
  CHECK(slurp(dir / "a.txt") == "second");
  CHECK_FALSE(fs::exists(dir / "a.txt.tmp"));
}

#ifdef EVINC_CLI_PATH
TEST_CASE("cli: solve on the bundled linear instance") {
  const fs::path out = fs::temp_directory_path() / "evinc_cli_solve";
  fs::remove_all(out);
  std::ostringstream cmd;
  cmd << EVINC_CLI_PATH << " solve --config " << EVINC_SOURCE_DIR
      << "/instances/linear_1d.json --out " << out << " > /dev/null 2>&1";
  REQUIRE(std::system(cmd.str().c_str()) == 0);
  const std::string csv = slurp(out / "trajectory.csv");
  CHECK(data_rows(csv) == 101);  // N + 1 rows
  CHECK(fs::exists(out / "run_metadata.json"));
  const Json meta = load_json_file(out / "run_metadata.json");
  CHECK(meta.at("command") == "solve");
  CHECK(meta.contains("seed"));
}

TEST_CASE("cli: filippov zero-defect certificate all-pass") {
  const fs::path out = fs::temp_directory_path() / "evinc_cli_filippov";
  fs::remove_all(out);
  std::ostringstream cmd;
  cmd << EVINC_CLI_PATH << " filippov --config " << EVINC_SOURCE_DIR
      << "/instances/filippov_tube.json --out " << out << " > /dev/null 2>&1";
  REQUIRE(std::system(cmd.str().c_str()) == 0);
  const std::string csv = slurp(out / "certificate.csv");
  CHECK(csv.find("false") == std::string::npos);
  CHECK(csv.find("true") != std::string::npos);
}

TEST_CASE("cli: exit codes") {
  const fs::path out = fs::temp_directory_path() / "evinc_cli_err";
  fs::remove_all(out);
  const fs::path bad = out / "bad.json";
  fs::create_directories(out);
  {
    std::ofstream f(bad);
    f << "{ not json";
  }
  std::ostringstream cmd;
  cmd << EVINC_CLI_PATH << " solve --config " << bad << " --out " << out
      << " > /dev/null 2>&1";
  const int status = std::system(cmd.str().c_str());
  CHECK(WEXITSTATUS(status) == 1);

  std::ostringstream cmd2;
  cmd2 << EVINC_CLI_PATH << " validate --config " << EVINC_SOURCE_DIR
       << "/instances/validate_linear.json --out " << (out / "v") << " > /dev/null 2>&1";
  CHECK(std::system(cmd2.str().c_str()) == 0);
  const Json rep = load_json_file(out / "v" / "validate.json");
  CHECK(rep.at("pass").get<bool>());
}
#endif
