#include <doctest.h>

#include "support.hpp"
#include "zermelo/error_analysis.hpp"

using namespace zermelo;

namespace {

const Point2 kOrigin(0.0, 0.5);
const double kRadius = 0.1;

ValueField synthetic_field(const TriMesh& mesh, const std::function<double(const Point2&)>& f) {
  ValueField v;
  v.values.resize(mesh.num_nodes());
  v.predecessors.assign(mesh.num_nodes(), Predecessor{});
  for (int i = 0; i < mesh.num_nodes(); ++i) v.values[i] = f(mesh.nodes[i]);
  return v;
}

}  // namespace

TEST_SUITE("error_analysis") {

TEST_CASE("linear fields have vanishing recovered curvature") {
  const TriMesh mesh = build_mesh(51, kOrigin, kRadius);
  const ValueField v = synthetic_field(
      mesh, [](const Point2& p) { return 0.3 * p.x() - 1.7 * p.y() + 0.2; });
  std::vector<char> nomask;
  CHECK(hessian_sup_estimate(v, mesh, nomask) <= 1e-8);
}

TEST_CASE("still-air distance field recovers the boundary curvature") {
  const WindField still = WindField::constant(Vector2(0.0, 0.0));
  for (int n : {201, 401}) {
    const RunArtifacts run = run_restricted_solve(still, 1.0, kOrigin, kRadius, n, 1e-10);
    std::vector<char> nomask;
    int skipped = 0;
    const double hess = hessian_sup_estimate(run.values, run.mesh, nomask, &skipped);
    // True curvature peaks at 1 / ball_radius = 10 on the circle.
    CHECK(hess >= 9.0);
    CHECK(hess <= 11.0);
  }
}

TEST_CASE("closed-form bound: structure and the worked value") {
  // Wind-rate term drops out at c1 = 0.
  CHECK(apriori_bound(0.01, 2.0, 10.0, 0.5, 0.0, 1.0, 1.5) ==
        doctest::Approx(0.01 * 2.0 * 10.0 * 1.5 * 1.5 + 14.0 * 0.01).epsilon(1e-14));
  // Plug-in with the vortex constants.
  const double c1 = 3.0 * std::sqrt(2.0 * std::exp(1.0));
  const double term = 2.0 * c1 * std::sqrt(1.0) * 2.25 / std::pow(0.5, 4.5);
  const double expected = 0.01 * 2.0 * (10.0 + term) * 1.5 * 1.5 + 0.14;
  CHECK(apriori_bound(0.01, 2.0, 10.0, 0.5, c1, 1.0, 1.5) ==
        doctest::Approx(expected).epsilon(1e-14));
  CHECK(expected == doctest::Approx(32.64).epsilon(1e-3));
  // Linear in h.
  CHECK(apriori_bound(0.02, 2.0, 10.0, 0.5, c1, 1.0, 1.5) ==
        doctest::Approx(2.0 * expected).epsilon(1e-14));
  CHECK_THROWS_AS(apriori_bound(0.01, 2.0, 10.0, 1.5, c1, 1.0, 1.5), std::invalid_argument);
}

TEST_CASE("bound is monotone in every argument") {
  auto gen = test::rng(71);
  std::uniform_real_distribution<double> d01(0.0, 1.0);
  for (int k = 0; k < 2000; ++k) {
    const double h = 0.001 + 0.05 * d01(gen);
    const double theta = 1.0 + 2.0 * d01(gen);
    const double hess = 20.0 * d01(gen);
    const double c0 = 0.8 * d01(gen);
    const double c1 = 10.0 * d01(gen);
    const double maxval = 0.5 + 2.0 * d01(gen);
    const double base = apriori_bound(h, theta, hess, c0, c1, 1.0, maxval);
    CHECK(apriori_bound(h * 1.1, theta, hess, c0, c1, 1.0, maxval) >= base);
    CHECK(apriori_bound(h, theta * 1.1, hess, c0, c1, 1.0, maxval) >= base);
    CHECK(apriori_bound(h, theta, hess + 1.0, c0, c1, 1.0, maxval) >= base);
    CHECK(apriori_bound(h, theta, hess, std::min(0.95, c0 * 1.1), c1, 1.0, maxval) >= base);
    CHECK(apriori_bound(h, theta, hess, c0, c1 * 1.1, 1.0, maxval) >= base);
  }
}

TEST_CASE("a-posteriori error of a field against itself vanishes") {
  const WindField still = WindField::constant(Vector2(0.0, 0.0));
  const RunArtifacts coarse = run_restricted_solve(still, 1.0, kOrigin, kRadius, 51, 1e-10);
  const RunArtifacts fine = run_restricted_solve(still, 1.0, kOrigin, kRadius, 76, 1e-10);
  std::vector<char> nomask;
  // Identical mesh/field: exact node hits, zero difference.
  CHECK(aposteriori_error(fine.values, fine.values, fine.mesh, fine.mesh, nomask).masked ==
        doctest::Approx(0.0).epsilon(1e-15));
  CHECK_THROWS_AS(aposteriori_error(fine.values, coarse.values, fine.mesh, coarse.mesh, nomask),
                  std::invalid_argument);
  // 101 against 51 is finer but not twice as fine the other way round.
  CHECK_THROWS_AS(aposteriori_error(coarse.values, fine.values, coarse.mesh, fine.mesh, nomask),
                  std::invalid_argument);
}

TEST_CASE("a-posteriori error tracks the true error against a fine reference") {
  const WindField still = WindField::constant(Vector2(0.0, 0.0));
  const RunArtifacts ref = run_restricted_solve(still, 1.0, kOrigin, kRadius, 1001, 1e-10);
  std::vector<char> nomask;
  for (int n : {51, 101, 201}) {
    const RunArtifacts run = run_restricted_solve(still, 1.0, kOrigin, kRadius, n, 1e-10);
    double true_err = 0.0;
    for (int v = 0; v < run.mesh.num_nodes(); ++v)
      true_err = std::max(true_err,
                          std::abs(run.values.values[v] - (run.mesh.nodes[v] - kOrigin).norm()));
    const AposterioriResult apost =
        aposteriori_error(run.values, ref.values, run.mesh, ref.mesh, nomask);
    CHECK(apost.masked <= true_err * 1.10);
    CHECK(apost.masked >= true_err * 0.75);
    // Richardson inflation recovers the true level.
    const double inflated = apost.masked * reference_inflation(run.mesh.h, ref.mesh.h);
    CHECK(inflated >= true_err * 0.85);
    CHECK(inflated <= true_err * 1.25);
  }
}

TEST_CASE("reference inflation factor") {
  CHECK(reference_inflation(0.02, 0.01) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(reference_inflation(0.02, 0.004) == doctest::Approx(1.25).epsilon(1e-14));
  CHECK_THROWS_AS(reference_inflation(0.01, 0.02), std::invalid_argument);
}

TEST_CASE("vortex Hessian supremum is stable under refinement") {
  const WindField f = make_case_b();
  const RunArtifacts ref = run_restricted_solve(f, 1.0, kOrigin, kRadius, 1001, 1e-10);
  const WindBounds wb = bounds(f);
  const RunArtifacts r201 = run_restricted_solve(f, 1.0, kOrigin, kRadius, 201, 1e-10);
  const RunArtifacts r401 = run_restricted_solve(f, 1.0, kOrigin, kRadius, 401, 1e-10);
  const ResolutionReport rep201 = analyze_against_reference(r201, ref, wb, 1.0);
  const ResolutionReport rep401 = analyze_against_reference(r401, ref, wb, 1.0);
  CHECK(std::isfinite(rep201.hessian_sup));
  CHECK(std::abs(rep401.hessian_sup - rep201.hessian_sup) <= 0.25 * rep201.hessian_sup);
  // Bound validity on both rows.
  CHECK(rep201.apriori > rep201.error);
  CHECK(rep401.apriori > rep401.error);
}

TEST_CASE("convergence study: still air against the analytic rate") {
  const WindField still = WindField::constant(Vector2(0.0, 0.0));
  const auto rows = convergence_study(still, 1.0, kOrigin, kRadius, {51, 101}, 401, 1e-10);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].order >= 0.9);
  CHECK(rows[1].order <= 1.25);
  for (const auto& r : rows) {
    CHECK(r.apriori > r.error);
    CHECK(r.error > 0.0);
  }
  CHECK_THROWS_AS(convergence_study(still, 1.0, kOrigin, kRadius, {101, 51}, 401, 1e-10),
                  std::invalid_argument);
  CHECK_THROWS_AS(convergence_study(still, 1.0, kOrigin, kRadius, {51, 101}, 101, 1e-10),
                  std::invalid_argument);
}

}  // TEST_SUITE
