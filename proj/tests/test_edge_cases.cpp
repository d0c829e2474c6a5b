#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "evinc/control.hpp"
#include "evinc/filippov.hpp"

using namespace evinc;

namespace {

// tube whose Lipschitz modulus in x grows linearly in time
MultiMap affine_k_tube(double k0, double k1, double halfwidth) {
  return MultiMap(
      [k0, k1, halfwidth](double t, const Vec& x, double) {
        const double c = (k0 + k1 * t) * x[0];
        return ConvexBody::interval(c - halfwidth, c + halfwidth);
      },
      TimeFn{k0, k1}, TimeFn{halfwidth}, k0 + k1);
}

TimeGrid graded_grid(double b, std::size_t steps) {
  // nodes clustered near t = 0: t_k = b (k/N)^2
  Vec t(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    const double s = static_cast<double>(k) / static_cast<double>(steps);
    t[k] = b * s * s;
  }
  t.back() = b;
  return TimeGrid(std::move(t));
}

}  // namespace

TEST_CASE("filippov with a time-varying lipschitz modulus") {
  // k(t) = 0.5 + t, so tau(t) = 0.5 t + t^2/2 enters the certificate
  const TimeGrid grid = TimeGrid::uniform(1.0, 400);
  const MonotoneOp A = MonotoneOp::scalar_linear(1, 1.0);
  const MultiMap F = affine_k_tube(0.5, 1.0, 1.0);
  const std::vector<Vec> h(grid.nodes(), Vec{3.0});
  const Trajectory ref = solve_forced(A, h, {0.5}, grid);
  const FilippovResult res = filippov_construct(A, F, ref, h, 0.0, 1e-8);
  for (std::size_t k = 0; k < grid.nodes(); ++k) {
    const double t = grid.t(k);
    CHECK(res.certificate.tau[k] == Catch::Approx(0.5 * t + 0.5 * t * t));
  }
  CHECK(res.certificate.all_pass());
  const auto& gaps = res.certificate.iterate_l1_gaps;
  for (std::size_t n = 1; n <= gaps.size(); ++n)
    CHECK(gaps[n - 1] <= res.certificate.envelope(static_cast<int>(n), grid.horizon()));
}

TEST_CASE("nonuniform grids work through the solver stack") {
  const TimeGrid grid = graded_grid(1.0, 200);
  const MonotoneOp A = MonotoneOp::scalar_linear(1, 1.0);

  SECTION("solve accuracy against the exponential") {
    const Trajectory x = solve_unforced(A, {1.0}, grid);
    for (std::size_t k = 0; k < grid.nodes(); ++k)
      CHECK(std::fabs(x.states[k][0] - std::exp(-grid.t(k))) <= 2e-2);
  }

  SECTION("flow nonexpansiveness") {
    const std::vector<Vec> f(grid.nodes(), Vec{0.3});
    const auto rep = contraction_check(A, {1.0}, {0.25}, f, grid);
    CHECK(rep.pass);
  }

  SECTION("trajectory norms use the actual step sizes") {
    std::vector<Vec> ones(grid.nodes(), Vec{2.0});
    const auto [lp, sup] = trajectory_norms(Trajectory(grid, ones), 2.0);
    CHECK(lp == Catch::Approx(2.0));
    CHECK(sup == 2.0);
  }

  SECTION("certificate on the graded grid") {
    const MultiMap F = MultiMap::tube(1.0, {0.0}, {1.0});
    const std::vector<Vec> h(grid.nodes(), Vec{2.0});
    const Trajectory ref = solve_forced(A, h, {0.0}, grid);
    const FilippovResult res = filippov_construct(A, F, ref, h, 0.0, 1e-8);
    CHECK(res.certificate.all_pass());
  }
}

TEST_CASE("p-laplacian with time-growing weights") {
  const std::size_t m = 12;
  WeightedPLaplacian lap{m, Vec(m + 1, 1.0), 2.0, 1.0, 1.0, 0.5};
  const MonotoneOp A = MonotoneOp::plaplacian(lap);
  REQUIRE(A.time_dependent());

  SECTION("negative slope is rejected") {
    WeightedPLaplacian bad{m, Vec(m + 1, 1.0), 2.0, 1.0, 1.0, -0.1};
    CHECK_THROWS_AS(MonotoneOp::plaplacian(bad), InputError);
  }

  SECTION("value scales with the time factor") {
    Rng rng(6);
    const Vec x = rng.uniform_vec(m, -1.0, 1.0);
    const Vec a0 = A.value(0.0, x).point_value();
    const Vec a1 = A.value(1.0, x).point_value();
    for (std::size_t i = 0; i < m; ++i) CHECK(a1[i] == Catch::Approx(1.5 * a0[i]));
  }

  SECTION("resolvent satisfies the implicit relation at interior times") {
    Rng rng(7);
    const Vec y = rng.uniform_vec(m, -1.0, 1.0);
    const double t = 0.6, h = 0.05;
    const Vec x = A.resolvent(t, h, y, 1e-11);
    Vec lhs = x;
    axpy(h, A.value(t, x).point_value(), lhs);
    CHECK(dist2(lhs, y) <= 1e-10);
  }

  SECTION("declared hypotheses hold over the horizon") {
    const HypothesisReport rep = validate_hypotheses(A, 300, 1.0);
    CHECK(rep.pass);
  }
}

TEST_CASE("optimize with a ball-valued perturbation") {
  ControlProblem prob;
  prob.op_family = [](double) { return MonotoneOp::scalar_linear(1, 1.0); };
  prob.F = MultiMap::state_ball(0.25, 0.2);
  prob.g_base = TimeFn{1.0};
  prob.r_base = TimeFn{1.0};
  prob.L = StateCost::quadratic(1.0, {0.3});
  prob.H = ControlCost::quadratic(0.1, {0.0});
  prob.grid = TimeGrid::uniform(1.0, 20);
  const OptimizeResult res = optimize(prob, {0.0}, 0.0, 2000, 29);
  // the semi-implicit selection sits in F at the predictor state, so the
  // implicit-state residual carries an O(k dt) term
  const double slack =
      prob.F.lipschitz()(1.0) * prob.grid.dt(0) * 2.0 + 10.0 * prob.solver.resolvent_tol;
  const auto rep = check_admissible(prob, res.pair, {0.0}, 0.0, slack);
  CHECK(rep.pass);
  for (std::size_t k = 1; k < prob.grid.nodes(); ++k) {
    const ConvexBody val = prob.F(prob.grid.t(k), res.pair.state.states[k - 1], 0.0);
    CHECK(distance(res.pair.selection[k], val) <= 1e-9);
  }
}

TEST_CASE("hausdorff on mid-dimensional boxes") {
  // translation: h(C, C + s) = |s|
  Rng rng(91);
  const std::size_t dim = 7;
  Vec lo = rng.uniform_vec(dim, -1.0, 0.0), hi = lo;
  for (std::size_t i = 0; i < dim; ++i) hi[i] += rng.uniform(0.5, 1.5);
  const ConvexBody box = ConvexBody::box(lo, hi);
  const Vec s = rng.uniform_vec(dim, -0.5, 0.5);
  CHECK(hausdorff(box, box.translated(s)) == Catch::Approx(norm2(s)).margin(1e-12));
}
