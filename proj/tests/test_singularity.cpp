#include <doctest.h>

#include <map>
#include <set>

#include "support.hpp"
#include "zermelo/error_analysis.hpp"
#include "zermelo/singularity.hpp"

using namespace zermelo;

namespace {

const Point2 kOrigin(0.0, 0.5);
const double kRadius = 0.1;

// Shared solves; the vortex runs are reused by several cases.
const RunArtifacts& case_b_run(int n) {
  static std::map<int, RunArtifacts> cache;
  auto it = cache.find(n);
  if (it == cache.end())
    it = cache.emplace(n, run_restricted_solve(make_case_b(), 1.0, kOrigin, kRadius, n, 1e-10))
             .first;
  return it->second;
}

int largest_component(const TriMesh& mesh, const std::vector<int>& tris) {
  std::vector<int> comp(tris.size(), -1);
  int best = 0;
  for (size_t i = 0; i < tris.size(); ++i) {
    if (comp[i] >= 0) continue;
    int size = 0;
    std::vector<size_t> stack{i};
    comp[i] = static_cast<int>(i);
    while (!stack.empty()) {
      const size_t a = stack.back();
      stack.pop_back();
      ++size;
      const std::set<int> nodes(mesh.triangles[tris[a]].begin(), mesh.triangles[tris[a]].end());
      for (size_t b = 0; b < tris.size(); ++b) {
        if (comp[b] >= 0) continue;
        for (int v : mesh.triangles[tris[b]])
          if (nodes.count(v)) {
            comp[b] = static_cast<int>(i);
            stack.push_back(b);
            break;
          }
      }
    }
    best = std::max(best, size);
  }
  return best;
}

double centroid_hausdorff(const TriMesh& ma, const std::vector<int>& a, const TriMesh& mb,
                          const std::vector<int>& b) {
  double worst = 0.0;
  for (int t : a) {
    double nearest = 1e300;
    for (int s : b)
      nearest = std::min(nearest, (ma.triangle_centroid(t) - mb.triangle_centroid(s)).norm());
    worst = std::max(worst, nearest);
  }
  for (int s : b) {
    double nearest = 1e300;
    for (int t : a)
      nearest = std::min(nearest, (ma.triangle_centroid(t) - mb.triangle_centroid(s)).norm());
    worst = std::max(worst, nearest);
  }
  return worst;
}

}  // namespace

TEST_SUITE("singularity") {

TEST_CASE("constant wind has no singular simplices") {
  const RunArtifacts run =
      run_restricted_solve(make_case_a(), 1.0, kOrigin, kRadius, 101, 1e-10);
  CHECK(detect_singular_simplices(run.values, run.mesh, 30.0).empty());
  CHECK(detect_singular_simplices(run.values, run.mesh, 90.0).empty());
}

TEST_CASE("a 180 degree threshold flags nothing") {
  const RunArtifacts& run = case_b_run(101);
  CHECK(detect_singular_simplices(run.values, run.mesh, 180.0).empty());
}

TEST_CASE("the vortex wake is flagged as one connected chain") {
  const RunArtifacts& run = case_b_run(201);
  REQUIRE(!run.flagged.empty());
  CHECK(largest_component(run.mesh, run.flagged) >= int(0.8 * run.flagged.size()));
  // Clockwise spin curls the collision line below and past the vortex core.
  for (int t : run.flagged) {
    const Point2 c = run.mesh.triangle_centroid(t);
    CHECK(c.x() > 0.4);
    CHECK(c.y() < 0.5);
  }
}

TEST_CASE("the divergence detector agrees on the wake location") {
  const RunArtifacts& run = case_b_run(201);
  const std::vector<int> by_div =
      detect_singular_simplices_divergence(run.values, run.mesh, 1.0);
  REQUIRE(!by_div.empty());
  // The two detectors mark overlapping neighborhoods.
  std::set<int> angle_set(run.flagged.begin(), run.flagged.end());
  int hits = 0;
  for (int t : by_div) hits += angle_set.count(t);
  CHECK(hits > 0);
  CHECK(centroid_hausdorff(run.mesh, run.flagged, run.mesh, by_div) <= 0.25);
}

TEST_CASE("spin flip mirrors the flagged set") {
  const RunArtifacts& minus = case_b_run(101);
  const RunArtifacts plus =
      run_restricted_solve(make_case_b(+1), 1.0, kOrigin, kRadius, 101, 1e-10);
  REQUIRE(!minus.flagged.empty());
  REQUIRE(!plus.flagged.empty());
  // Mirror the plus set across the midline and compare within one patch.
  std::vector<int> mirrored;
  for (int t : plus.flagged) mirrored.push_back(t);
  double worst = 0.0;
  for (int t : minus.flagged) {
    double nearest = 1e300;
    for (int s : mirrored) {
      Point2 c = plus.mesh.triangle_centroid(s);
      c.y() = 1.0 - c.y();
      nearest = std::min(nearest, (minus.mesh.triangle_centroid(t) - c).norm());
    }
    worst = std::max(worst, nearest);
  }
  CHECK(worst <= 2.0 * minus.mesh.h);
}

TEST_CASE("flagged sets are stable under refinement") {
  const RunArtifacts& coarse = case_b_run(101);
  const RunArtifacts& fine = case_b_run(201);
  CHECK(centroid_hausdorff(coarse.mesh, coarse.flagged, fine.mesh, fine.flagged) <=
        2.0 * coarse.mesh.h);
}

TEST_CASE("band construction: depth, zero level, monotonicity") {
  const RunArtifacts& run = case_b_run(101);
  const std::vector<double>& u = run.values.values;

  const TrustRegion zero = trust_region(run.values, run.mesh, run.flagged, 0.0);
  // Zero band: marked nodes are the flagged nodes and downstream nodes only.
  std::set<int> flagged_nodes;
  for (int t : run.flagged)
    for (int v : run.mesh.triangles[t]) flagged_nodes.insert(v);
  double min_flagged_u = 1e300;
  for (int v : flagged_nodes) min_flagged_u = std::min(min_flagged_u, u[v]);
  for (int v = 0; v < run.mesh.num_nodes(); ++v)
    if (zero.marked_nodes[v])
      CHECK(u[v] >= min_flagged_u - 1e-12);

  const double eps = 5e-3;
  const TrustRegion band = trust_region(run.values, run.mesh, run.flagged, eps);
  for (int t : run.flagged) CHECK(band.marked_tris[t]);
  int zero_count = 0, band_count = 0;
  for (int t = 0; t < run.mesh.num_triangles(); ++t) {
    zero_count += zero.marked_tris[t];
    band_count += band.marked_tris[t];
    if (zero.marked_tris[t]) CHECK(band.marked_tris[t]);  // monotone in epsilon
  }
  CHECK(band_count > zero_count);

  // Backward band depth audit: marked band nodes stay within 2 eps of a seed.
  for (int v = 0; v < run.mesh.num_nodes(); ++v) {
    if (!band.marked_nodes[v] || zero.marked_nodes[v]) continue;
    double nearest_seed_above = 1e300;
    for (int s : flagged_nodes)
      if (u[s] >= u[v]) nearest_seed_above = std::min(nearest_seed_above, u[s] - u[v]);
    CHECK(nearest_seed_above <= 2.0 * eps + run.mesh.h / (1.0 - 0.5) + 1e-9);
  }
}

TEST_CASE("certification: constant wind is safe everywhere") {
  const RunArtifacts run =
      run_restricted_solve(make_case_a(), 1.0, kOrigin, kRadius, 101, 1e-10);
  const TrustRegion region = trust_region(run.values, run.mesh, run.flagged, 1e-3);
  auto gen = test::rng(61);
  int checked = 0;
  while (checked < 20) {
    const Point2 dest = test::random_point(gen, 0.05, 0.95);
    if ((dest - kOrigin).norm() < kRadius + 3.0 * run.mesh.h) continue;
    ++checked;
    const CertifyReport rep =
        certify_destination(run.values, run.mesh, make_case_a(), 1.0, region, dest);
    CHECK(rep.safe);
    CHECK(rep.trajectory.points.size() > 2);
  }
}

TEST_CASE("certification: the detected chain itself is unsafe, clear points are safe") {
  const RunArtifacts& run = case_b_run(201);
  const TrustRegion region = trust_region(run.values, run.mesh, run.flagged, 3e-3);
  const WindField field = make_case_b();

  const Point2 on_chain = run.mesh.triangle_centroid(run.flagged[run.flagged.size() / 2]);
  const CertifyReport bad =
      certify_destination(run.values, run.mesh, field, 1.0, region, on_chain);
  CHECK(!bad.safe);
  CHECK(bad.nearest_marked_distance == 0.0);

  const CertifyReport good =
      certify_destination(run.values, run.mesh, field, 1.0, region, Point2(0.9, 0.25));
  CHECK(good.safe);
  CHECK(good.nearest_marked_distance > 0.0);
  CHECK(!good.trajectory.crosses_marked);

  CHECK_THROWS_AS(
      certify_destination(run.values, run.mesh, field, 1.0, region, Point2(0.05, 0.5)),
      std::domain_error);
}

TEST_CASE("mask dilation grows by whole patches") {
  const RunArtifacts& run = case_b_run(101);
  std::vector<char> mask(run.mesh.num_triangles(), 0);
  mask[run.flagged.front()] = 1;
  const std::vector<char> grown = dilate_mask(run.mesh, mask, 1);
  int before = 1, after = 0;
  for (char c : grown) after += c;
  CHECK(after > before);
  const std::vector<char> again = dilate_mask(run.mesh, grown, 1);
  int more = 0;
  for (char c : again) more += c;
  CHECK(more > after);
}

}  // TEST_SUITE
