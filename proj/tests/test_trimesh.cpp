#include <doctest.h>

#include <set>
#include <unordered_map>

#include "support.hpp"
#include "zermelo/trimesh.hpp"

using namespace zermelo;

namespace {

// Area of the hole left around the origin ball: shoelace of the circle-node
// polygon, closed along the box edge for a clipped ball.
double hole_polygon_area(const TriMesh& mesh) {
  std::vector<Point2> ring;
  for (int v = 0; v < mesh.num_nodes(); ++v)
    if (mesh.node_class[v] == NodeClass::OriginBoundary) ring.push_back(mesh.nodes[v]);
  std::sort(ring.begin(), ring.end(), [&](const Point2& a, const Point2& b) {
    const Vector2 da = a - mesh.origin, db = b - mesh.origin;
    return std::atan2(da.y(), da.x()) < std::atan2(db.y(), db.x());
  });
  double area = 0.0;
  for (size_t k = 0; k < ring.size(); ++k) {
    const Point2& a = ring[k];
    const Point2& b = ring[(k + 1) % ring.size()];
    area += 0.5 * (a.x() * b.y() - b.x() * a.y());
  }
  return std::abs(area);
}

std::unordered_map<int64_t, int> edge_counts(const TriMesh& mesh) {
  std::unordered_map<int64_t, int> count;
  for (const auto& t : mesh.triangles)
    for (int e = 0; e < 3; ++e) {
      const int a = std::min(t[e], t[(e + 1) % 3]);
      const int b = std::max(t[e], t[(e + 1) % 3]);
      count[(int64_t(a) << 32) | uint32_t(b)]++;
    }
  return count;
}

}  // namespace

TEST_SUITE("trimesh") {

TEST_CASE("plain 3x3 grid quality metrics") {
  const TriMesh mesh = build_grid_mesh(3);
  CHECK(mesh.num_nodes() == 9);
  CHECK(mesh.num_triangles() == 8);
  CHECK(mesh.h == doctest::Approx(std::sqrt(2.0) * 0.5).epsilon(1e-15));
  CHECK(mesh.h_perp == doctest::Approx(0.5 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(mesh.aspect == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("circle nodes sit exactly on the origin circle") {
  const TriMesh mesh = build_mesh(101, Point2(0.0, 0.5), 0.1);
  int count = 0;
  for (int v = 0; v < mesh.num_nodes(); ++v) {
    if (mesh.node_class[v] != NodeClass::OriginBoundary) continue;
    ++count;
    CHECK(std::abs((mesh.nodes[v] - mesh.origin).norm() - 0.1) <= 1e-12);
  }
  CHECK(count >= 20);
}

TEST_CASE("meshes are conforming with positive areas") {
  for (const TriMesh& mesh :
       {build_mesh(51, Point2(0.0, 0.5), 0.1), build_mesh(64, Point2(0.33, 0.52), 0.1)}) {
    for (int t = 0; t < mesh.num_triangles(); ++t) CHECK(mesh.triangle_area(t) > 0.0);
    for (const auto& [key, c] : edge_counts(mesh)) {
      (void)key;
      CHECK(c >= 1);
      CHECK(c <= 2);
    }
    CHECK(mesh.aspect >= 1.0);
  }
}

TEST_CASE("triangle areas fill the box minus the hole polygon") {
  for (const TriMesh& mesh :
       {build_mesh(101, Point2(0.0, 0.5), 0.1), build_mesh(60, Point2(0.4, 0.5), 0.12)}) {
    double total = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) total += mesh.triangle_area(t);
    const double expected = 1.0 - hole_polygon_area(mesh);
    CHECK(std::abs(total - expected) <= 1e-10 * mesh.num_triangles());
  }
}

TEST_CASE("patch boundaries chain into closed or open polygons") {
  const TriMesh mesh = build_mesh(41, Point2(0.0, 0.5), 0.1);
  int closed_checked = 0, open_checked = 0;
  for (int v = 0; v < mesh.num_nodes(); ++v) {
    const auto chain = patch_boundary(mesh, v);
    CHECK(int(chain.size()) == mesh.far_offsets[v + 1] - mesh.far_offsets[v]);
    for (const PatchSegment& s : chain) {
      CHECK(s.a != v);
      CHECK(s.b != v);
    }
    for (size_t k = 1; k < chain.size(); ++k) CHECK(chain[k].a == chain[k - 1].b);
    if (mesh.node_class[v] == NodeClass::Interior) {
      // Interior patches close up; the union-jack grid gives 4 or 8 segments
      // away from the ring.
      CHECK(chain.front().a == chain.back().b);
      ++closed_checked;
    } else {
      ++open_checked;
    }
  }
  CHECK(closed_checked > 0);
  CHECK(open_checked > 0);
}

TEST_CASE("grid-interior patches have union-jack valence") {
  const TriMesh mesh = build_grid_mesh(9);
  std::set<int> sizes;
  for (int v = 0; v < mesh.num_nodes(); ++v)
    if (mesh.node_class[v] == NodeClass::Interior)
      sizes.insert(mesh.far_offsets[v + 1] - mesh.far_offsets[v]);
  CHECK(sizes == std::set<int>{4, 8});
}

TEST_CASE("refinement halves h and keeps the aspect ratio bounded") {
  const TriMesh coarse = build_mesh(101, Point2(0.0, 0.5), 0.1);
  const TriMesh fine = build_mesh(201, Point2(0.0, 0.5), 0.1);
  CHECK(coarse.h / fine.h == doctest::Approx(2.0).epsilon(0.02));
  for (int n : {51, 101, 201, 401}) {
    const TriMesh mesh = build_mesh(n, Point2(0.0, 0.5), 0.1);
    CHECK(mesh.aspect <= 2.5);
  }
}

TEST_CASE("every triangle keeps a foothold outside the ball") {
  const TriMesh mesh = build_mesh(101, Point2(0.0, 0.5), 0.1);
  for (int t = 0; t < mesh.num_triangles(); ++t)
    CHECK((mesh.triangle_centroid(t) - mesh.origin).norm() > mesh.ball_radius);
}

TEST_CASE("symmetric builds mirror exactly") {
  for (const Point2 x0 : {Point2(0.0, 0.5), Point2(0.35, 0.5)}) {
    const TriMesh mesh = build_mesh(61, x0, 0.1);
    REQUIRE(!mesh.mirror_nodes.empty());
    for (int v = 0; v < mesh.num_nodes(); ++v) {
      const int m = mesh.mirror_nodes[v];
      CHECK(std::abs(mesh.nodes[m].x() - mesh.nodes[v].x()) <= 1e-15);
      CHECK(std::abs(mesh.nodes[m].y() - (1.0 - mesh.nodes[v].y())) <= 1e-12);
      CHECK(mesh.mirror_nodes[m] == v);
    }
    std::set<std::array<int, 3>> tri_set;
    for (auto t : mesh.triangles) {
      std::sort(t.begin(), t.end());
      tri_set.insert(t);
    }
    for (const auto& t : mesh.triangles) {
      std::array<int, 3> m{mesh.mirror_nodes[t[0]], mesh.mirror_nodes[t[1]],
                           mesh.mirror_nodes[t[2]]};
      std::sort(m.begin(), m.end());
      CHECK(tri_set.count(m) == 1);
    }
  }
}

TEST_CASE("point location and barycentric interpolation") {
  const TriMesh mesh = build_mesh(51, Point2(0.0, 0.5), 0.1);
  auto gen = test::rng(31);
  for (int k = 0; k < 2000; ++k) {
    const Point2 x = test::random_point(gen, 0.001, 0.999);
    const int t = mesh.locate(x);
    if ((x - mesh.origin).norm() < 0.95 * mesh.ball_radius) {
      // Strictly inside the ball (clear of the chord-arc slivers).
      CHECK(t < 0);
    } else if ((x - mesh.origin).norm() > mesh.ball_radius + 0.1) {
      REQUIRE(t >= 0);
      CHECK(mesh.barycentric(t, x).minCoeff() >= -1e-11);
    }
  }
  CHECK(mesh.locate(Point2(3.0, 0.5)) < 0);
}

TEST_CASE("construction is deterministic") {
  const TriMesh a = build_mesh(75, Point2(0.0, 0.5), 0.1);
  const TriMesh b = build_mesh(75, Point2(0.0, 0.5), 0.1);
  REQUIRE(a.num_nodes() == b.num_nodes());
  REQUIRE(a.num_triangles() == b.num_triangles());
  for (int v = 0; v < a.num_nodes(); ++v) CHECK(a.nodes[v] == b.nodes[v]);
  for (int t = 0; t < a.num_triangles(); ++t) CHECK(a.triangles[t] == b.triangles[t]);
}

TEST_CASE("invalid constructions are rejected") {
  CHECK_THROWS_AS(build_mesh(10, Point2(0.0, 0.5), 0.1), std::invalid_argument);
  CHECK_THROWS_AS(build_mesh(101, Point2(0.0, 0.5), 0.01), std::invalid_argument);
  CHECK_THROWS_AS(build_mesh(101, Point2(-0.5, 0.5), 0.1), std::invalid_argument);
}

}  // TEST_SUITE
