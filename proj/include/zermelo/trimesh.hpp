#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "zermelo/types.hpp"

namespace zermelo {

enum class NodeClass : std::uint8_t {
  Interior,        // receives nodal updates
  OriginBoundary,  // on the origin-ball circle, value pinned by the boundary oracle
  OuterBoundary    // on the edge of the unit box
};

/// One far edge of a node patch: the triangle edge opposite the patch node.
struct PatchSegment {
  int a;
  int b;
};

/// Conforming triangulation of the unit box with an optional circular hole
/// around the origin point. Immutable after construction.
struct TriMesh {
  std::vector<Point2> nodes;
  std::vector<std::array<int, 3>> triangles;  // counterclockwise
  std::vector<NodeClass> node_class;

  // Per-node incident triangles, far edges (one per incident triangle), and
  // one-ring neighbors, all in CSR layout.
  std::vector<int> patch_offsets;
  std::vector<int> patch_triangles;
  std::vector<int> far_offsets;
  std::vector<std::array<int, 2>> far_edges;
  std::vector<int> neighbor_offsets;
  std::vector<int> neighbors;

  // Node index of the mirror partner across the line y = 0.5 when the mesh
  // was built symmetric to that line; empty otherwise.
  std::vector<int> mirror_nodes;

  double h = 0.0;       // max triangle diameter
  double h_perp = 0.0;  // min triangle altitude
  double aspect = 0.0;  // h / h_perp

  Point2 origin = Point2::Zero();
  double ball_radius = 0.0;
  int grid_n = 0;

  // Uniform bucket index for point location.
  int locator_cells = 0;
  std::vector<int> locator_offsets;
  std::vector<int> locator_triangles;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }

  double triangle_area(int t) const;
  double triangle_diameter(int t) const;
  double triangle_altitude(int t) const;
  Point2 triangle_centroid(int t) const;

  /// Containing triangle of a point, or -1 if outside the meshed region.
  int locate(const Point2& x) const;

  /// Barycentric coordinates of x in triangle t.
  Eigen::Vector3d barycentric(int t, const Point2& x) const;
};

/// Uniform n x n grid on the unit box, points strictly closer than a small
/// protection distance to the circle around x0 removed, equally spaced nodes
/// inserted exactly on the in-box circle arc, and the gap ring triangulated.
/// When x0 lies on the horizontal midline and n is odd, the triangulation is
/// built exactly mirror-symmetric to that line.
TriMesh build_mesh(int n, const Point2& x0, double ball_radius);

/// Plain uniform grid without a hole (test meshes, synthetic fields).
TriMesh build_grid_mesh(int n);

/// Far edges of a node's patch, chained so consecutive segments share an
/// endpoint: a closed polygon for interior nodes, an open chain on the
/// boundary. Throws if the node has no incident triangles.
std::vector<PatchSegment> patch_boundary(const TriMesh& mesh, int node);

/// Indices of nodes on the origin-ball circle.
std::vector<int> origin_boundary_nodes(const TriMesh& mesh);

}  // namespace zermelo
