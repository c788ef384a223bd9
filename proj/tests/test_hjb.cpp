#include <doctest.h>

#include "support.hpp"
#include "zermelo/hjb.hpp"

using namespace zermelo;

namespace {

const Point2 kOrigin(0.0, 0.5);
const double kRadius = 0.1;

BoundaryOracle still_air_oracle(const TriMesh& mesh) {
  return test::make_oracle(mesh, [&](double) { return kRadius; });
}

BoundaryOracle constant_wind_oracle(const TriMesh& mesh, const Vector2& w) {
  return test::make_oracle(mesh, [&](double theta) {
    const Point2 xi = mesh.origin + kRadius * Point2(std::cos(theta), std::sin(theta));
    return test::constant_wind_arrival(xi, mesh.origin, w, 1.0);
  });
}

}  // namespace

TEST_SUITE("hjb") {

TEST_CASE("edge minimization: still air foot of perpendicular") {
  const FrozenWind wind(Vector2(0.0, 0.0), 1.0);
  const EdgeMinimum em = minimize_over_edge(Point2(0.5, 0.5), wind, Point2(0.0, 0.0),
                                            Point2(1.0, 0.0), 0.0, 0.0);
  CHECK(em.value == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(em.s == doctest::Approx(0.5).epsilon(1e-7));
}

TEST_CASE("edge minimization: collinear tailwind") {
  const FrozenWind wind(Vector2(0.0, 0.5), 1.0);
  const EdgeMinimum em = minimize_over_edge(Point2(0.5, 0.5), wind, Point2(0.0, 0.0),
                                            Point2(1.0, 0.0), 0.0, 0.0);
  CHECK(em.value == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
  CHECK(em.s == doctest::Approx(0.5).epsilon(1e-7));
}

TEST_CASE("nodal update is a distance map over the patch boundary in still air") {
  const TriMesh mesh = build_grid_mesh(5);
  const WindField still = WindField::constant(Vector2(0.0, 0.0));
  ValueField values;
  values.values.assign(mesh.num_nodes(), 0.0);
  values.predecessors.assign(mesh.num_nodes(), Predecessor{});
  // Center node of the 5x5 grid.
  int center = -1;
  for (int v = 0; v < mesh.num_nodes(); ++v)
    if ((mesh.nodes[v] - Point2(0.5, 0.5)).norm() < 1e-12) center = v;
  REQUIRE(center >= 0);
  const HopfLaxResult r = hopf_lax_update(mesh, still, 1.0, values, center);
  double expected = 1e300;
  for (const PatchSegment& s : patch_boundary(mesh, center))
    expected = std::min(expected, point_segment_distance(mesh.nodes[center], mesh.nodes[s.a],
                                                         mesh.nodes[s.b]));
  CHECK(r.value == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("still-air solve reproduces the distance map") {
  const TriMesh mesh = build_mesh(101, kOrigin, kRadius);
  const WindField still = WindField::constant(Vector2(0.0, 0.0));
  const ValueField sol = solve(mesh, still, 1.0, still_air_oracle(mesh), 1e-10);

  double worst = 0.0;
  for (int v = 0; v < mesh.num_nodes(); ++v) {
    const double exact = (mesh.nodes[v] - mesh.origin).norm();
    worst = std::max(worst, std::abs(sol.values[v] - exact));
  }
  // Absolute sanity bound; the acceptance suite also checks the closed-form
  // error bound with the recovered Hessian.
  CHECK(worst <= 3.0 * mesh.h / (1.0 - 0.0));
  CHECK(worst > 0.0);
}

TEST_CASE("constant-wind solve matches the quadratic-root arrival times") {
  const TriMesh mesh = build_mesh(101, kOrigin, kRadius);
  const WindField wind = make_case_a();
  const Vector2 w = eval_wind(wind, Point2(0.5, 0.5));
  const ValueField sol = solve(mesh, wind, 1.0, constant_wind_oracle(mesh, w), 1e-10);

  double worst = 0.0;
  for (int v = 0; v < mesh.num_nodes(); ++v) {
    const double exact = test::constant_wind_arrival(mesh.nodes[v], mesh.origin, w, 1.0);
    worst = std::max(worst, std::abs(sol.values[v] - exact));
  }
  CHECK(worst <= 3.0 * mesh.h / (1.0 - 0.5));
}

TEST_CASE("solver invariants: fixed point, causality, envelopes, monotone sweeps") {
  const TriMesh mesh = build_mesh(51, kOrigin, kRadius);
  const WindField wind = make_case_b();
  const BoundaryOracle oracle = test::make_oracle(mesh, [&](double) { return kRadius; });
  const double tol = 1e-10;
  const ValueField sol = solve(mesh, wind, 1.0, oracle, tol);

  CHECK(sol.report.monotonicity_violations == 0);
  CHECK(sol.report.sweeps > 1);
  CHECK(sol.report.final_residual <= tol);

  double max_u = 0.0;
  for (double u : sol.values) max_u = std::max(max_u, std::abs(u));

  const double c0 = bounds(wind).speed;
  const double min_g = *std::min_element(oracle.values.begin(), oracle.values.end());
  const std::vector<double> graph = test::graph_distance(mesh, oracle.node_ids);
  for (int v = 0; v < mesh.num_nodes(); ++v) {
    if (mesh.node_class[v] == NodeClass::OriginBoundary) {
      CHECK(sol.values[v] == oracle.value_at_node(v));
      continue;
    }
    // One more nodal update changes nothing beyond tolerance.
    const HopfLaxResult r = hopf_lax_update(mesh, wind, 1.0, sol, v);
    CHECK(std::abs(r.value - sol.values[v]) <= tol * max_u);
    // The minimizer record interpolates a strictly smaller value.
    CHECK(sol.predecessors[v].valid());
    CHECK(sol.predecessors[v].value < sol.values[v]);
    // Speed envelopes.
    const double dist = (mesh.nodes[v] - mesh.origin).norm() - mesh.ball_radius;
    CHECK(sol.values[v] - min_g >= dist / (1.0 + c0) - 1e-9);
    CHECK(sol.values[v] - min_g <= graph[v] / (1.0 - c0) + 1e-9);
  }
}

TEST_CASE("Jacobi and Gauss-Seidel agree at the fixed point") {
  const TriMesh mesh = build_mesh(51, kOrigin, kRadius);
  const double tol = 1e-10;
  for (const WindField& wind : {WindField::constant(Vector2(0.0, 0.0)), make_case_b()}) {
    const BoundaryOracle oracle = test::make_oracle(mesh, [&](double) { return kRadius; });
    const ValueField gs = solve(mesh, wind, 1.0, oracle, tol, SweepScheme::GaussSeidel);
    const ValueField ja = solve(mesh, wind, 1.0, oracle, tol, SweepScheme::Jacobi);
    double max_u = 0.0;
    for (double u : gs.values) max_u = std::max(max_u, std::abs(u));
    for (int v = 0; v < mesh.num_nodes(); ++v)
      CHECK(std::abs(gs.values[v] - ja.values[v]) <= 10.0 * tol * max_u);
  }
}

TEST_CASE("spin flip mirrors the solution across the midline") {
  const TriMesh mesh = build_mesh(51, kOrigin, kRadius);
  REQUIRE(!mesh.mirror_nodes.empty());
  const double tol = 1e-10;
  // g is symmetric for both spins: the vortex wind is negligible at the ball.
  const BoundaryOracle oracle = test::make_oracle(mesh, [&](double) { return kRadius; });
  const ValueField plus = solve(mesh, make_case_b(+1), 1.0, oracle, tol);
  const ValueField minus = solve(mesh, make_case_b(-1), 1.0, oracle, tol);
  double max_u = 0.0;
  for (double u : plus.values) max_u = std::max(max_u, std::abs(u));
  double worst = 0.0;
  for (int v = 0; v < mesh.num_nodes(); ++v)
    worst = std::max(worst,
                     std::abs(plus.values[v] - minus.values[mesh.mirror_nodes[v]]));
  CHECK(worst <= 10.0 * tol * max_u);
}

TEST_CASE("interpolation of the nodal field") {
  const TriMesh mesh = build_mesh(101, kOrigin, kRadius);
  const WindField still = WindField::constant(Vector2(0.0, 0.0));
  const ValueField sol = solve(mesh, still, 1.0, still_air_oracle(mesh), 1e-10);

  // Node hit is exact; an edge midpoint is the mean of its endpoints.
  const int v0 = 2000;
  CHECK(eval_value(sol, mesh, mesh.nodes[v0]) == doctest::Approx(sol.values[v0]).epsilon(1e-12));
  const int a = mesh.far_edges[mesh.far_offsets[v0]][0];
  const int b = mesh.far_edges[mesh.far_offsets[v0]][1];
  const Point2 mid = 0.5 * (mesh.nodes[a] + mesh.nodes[b]);
  CHECK(eval_value(sol, mesh, mid) ==
        doctest::Approx(0.5 * (sol.values[a] + sol.values[b])).epsilon(1e-10));

  // Against the analytic solution at random interior points.
  auto gen = test::rng(41);
  int checked = 0;
  while (checked < 100) {
    const Point2 x = test::random_point(gen, 0.05, 0.95);
    if ((x - mesh.origin).norm() < mesh.ball_radius + 0.02) continue;
    ++checked;
    const double exact = (x - mesh.origin).norm();
    // Nodal error plus the interpolation error of a smooth function.
    const double hess = 1.0 / (x - mesh.origin).norm();
    CHECK(std::abs(eval_value(sol, mesh, x) - exact) <=
          3.0 * mesh.h / 1.0 + mesh.h * mesh.h * hess / 2.0);
  }
  CHECK_THROWS_AS(eval_value(sol, mesh, Point2(0.001, 0.5)), std::domain_error);
  CHECK_THROWS_AS(eval_value(sol, mesh, Point2(1.5, 0.5)), std::domain_error);
}

TEST_CASE("boundary oracle invariants from samples") {
  const TriMesh mesh = build_mesh(51, kOrigin, kRadius);
  const BoundaryOracle oracle = constant_wind_oracle(mesh, eval_wind(make_case_a(), kOrigin));
  const double c0 = 0.5;
  for (size_t i = 0; i < oracle.values.size(); ++i) {
    CHECK(oracle.values[i] >= kRadius / (1.0 + c0) - 1e-12);
    CHECK(oracle.values[i] <= kRadius / (1.0 - c0) + 1e-12);
  }
  // The spline reproduces the samples and is smooth along the arc.
  for (size_t i = 0; i < oracle.values.size(); ++i)
    CHECK(oracle.value_at_angle(oracle.angles[i]) ==
          doctest::Approx(oracle.values[i]).epsilon(1e-10));
}

TEST_CASE("solver rejects inconsistent inputs") {
  const TriMesh mesh = build_mesh(51, kOrigin, kRadius);
  const WindField gale = WindField::constant(Vector2(1.5, 0.0));
  const BoundaryOracle oracle = still_air_oracle(mesh);
  CHECK_THROWS_AS(solve(mesh, gale, 1.0, oracle, 1e-10), std::domain_error);
  CHECK_THROWS_AS(solve(mesh, make_case_a(), 1.0, oracle, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(
      solve(mesh, make_case_a(), 1.0, oracle, 1e-10, SweepScheme::Jacobi, 3),
      SolveError);
}

}  // TEST_SUITE
