#include "zermelo/singularity.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "zermelo/numerics.hpp"

namespace zermelo {

namespace {

int64_t edge_key(int a, int b) {
  return (int64_t(std::min(a, b)) << 32) | uint32_t(std::max(a, b));
}

// Downstream hop depth per node: how many chain hops continue past it.
std::vector<int> downstream_depths(const ValueField& values, const TriMesh& mesh) {
  const int nn = mesh.num_nodes();
  std::vector<std::vector<int>> consumers(nn);
  for (int v = 0; v < nn; ++v) {
    const Predecessor& p = values.predecessors[v];
    if (!p.valid()) continue;
    consumers[p.edge_a].push_back(v);
    consumers[p.edge_b].push_back(v);
  }
  std::vector<int> order(nn);
  for (int v = 0; v < nn; ++v) order[v] = v;
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return values.values[a] > values.values[b]; });
  std::vector<int> depth(nn, 0);
  for (int v : order)
    for (int c : consumers[v]) depth[v] = std::max(depth[v], 1 + depth[c]);
  return depth;
}

}  // namespace

std::vector<int> detect_singular_simplices(const ValueField& values, const TriMesh& mesh,
                                           double angle_threshold_deg, double chain_depth_hops) {
  const double cos_threshold = std::cos(angle_threshold_deg * M_PI / 180.0);
  // Launch collar: within a few boundary patches of the circle the inflow
  // directions reflect the boundary-condition discretization, not the flow,
  // and the collar width must not shrink with the grid or coarse and fine
  // detections diverge right at the ball.
  const double collar = mesh.ball_radius * 1.15;
  std::vector<int> flagged;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    bool eligible = true;
    Vector2 dir[3];
    for (int e = 0; e < 3; ++e) {
      if (mesh.node_class[tri[e]] == NodeClass::OriginBoundary ||
          (mesh.nodes[tri[e]] - mesh.origin).norm() < collar ||
          !values.predecessors[tri[e]].valid()) {
        eligible = false;
        break;
      }
      dir[e] = inflow_direction(mesh, values, tri[e]);
    }
    if (!eligible) continue;
    double min_cos = 1.0;
    for (int e = 0; e < 3; ++e)
      for (int f = e + 1; f < 3; ++f) min_cos = std::min(min_cos, dir[e].dot(dir[f]));
    if (min_cos < cos_threshold) flagged.push_back(t);
  }
  if (flagged.empty()) return flagged;

  // Keep only locally maximal arrival times: a genuine cut-locus simplex has
  // no long minimizer-chain continuation downstream of it.
  const std::vector<int> depth = downstream_depths(values, mesh);
  std::unordered_map<int64_t, std::vector<int>> consumers_by_edge;
  for (int v = 0; v < mesh.num_nodes(); ++v) {
    const Predecessor& p = values.predecessors[v];
    if (p.valid()) consumers_by_edge[edge_key(p.edge_a, p.edge_b)].push_back(v);
  }
  std::vector<int> kept;
  for (int t : flagged) {
    const auto& tri = mesh.triangles[t];
    int continuation = 0;
    for (int e = 0; e < 3; ++e) {
      const auto it = consumers_by_edge.find(edge_key(tri[e], tri[(e + 1) % 3]));
      if (it == consumers_by_edge.end()) continue;
      for (int c : it->second) continuation = std::max(continuation, 1 + depth[c]);
    }
    if (continuation <= chain_depth_hops) kept.push_back(t);
  }
  return kept;
}

std::vector<int> detect_singular_simplices_divergence(const ValueField& values,
                                                      const TriMesh& mesh,
                                                      double threshold_scale) {
  std::vector<int> flagged;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    bool eligible = true;
    Vector2 dir[3];
    for (int e = 0; e < 3; ++e) {
      if (mesh.node_class[tri[e]] == NodeClass::OriginBoundary ||
          !values.predecessors[tri[e]].valid()) {
        eligible = false;
        break;
      }
      dir[e] = inflow_direction(mesh, values, tri[e]);
    }
    if (!eligible) continue;
    // Boundary flux of the linearly interpolated direction field.
    double flux = 0.0;
    for (int e = 0; e < 3; ++e) {
      const Point2 &a = mesh.nodes[tri[e]], &b = mesh.nodes[tri[(e + 1) % 3]];
      const Vector2 mid_dir = 0.5 * (dir[e] + dir[(e + 1) % 3]);
      const Vector2 edge = b - a;
      const Vector2 outward(edge.y(), -edge.x());  // edge length absorbed
      flux += mid_dir.dot(outward);
    }
    const double divergence = flux / mesh.triangle_area(t);
    if (divergence < -threshold_scale / mesh.triangle_diameter(t)) flagged.push_back(t);
  }
  return flagged;
}

TrustRegion trust_region(const ValueField& values, const TriMesh& mesh,
                         const std::vector<int>& flagged, double epsilon) {
  if (epsilon < 0.0) throw std::invalid_argument("band depth must be non-negative");
  const int nn = mesh.num_nodes();
  const int nt = mesh.num_triangles();

  TrustRegion region;
  region.flagged = flagged;
  region.epsilon = epsilon;
  region.flagged_mask.assign(nt, 0);
  for (int t : flagged) region.flagged_mask[t] = 1;
  region.marked_nodes.assign(nn, 0);
  region.marked_tris.assign(nt, 0);

  const std::vector<double>& u = values.values;

  // Backward band: from every flagged node, walk the chains toward the origin
  // until 2 epsilon of arrival time is consumed.
  std::vector<double> best_floor(nn, std::numeric_limits<double>::infinity());
  std::vector<std::pair<int, double>> stack;
  for (int t : flagged)
    for (int v : mesh.triangles[t]) stack.emplace_back(v, u[v] - 2.0 * epsilon);
  while (!stack.empty()) {
    const auto [v, floor] = stack.back();
    stack.pop_back();
    if (floor >= best_floor[v]) continue;  // dominated
    best_floor[v] = floor;
    region.marked_nodes[v] = 1;
    const Predecessor& p = values.predecessors[v];
    if (!p.valid()) continue;
    for (int next : {p.edge_a, p.edge_b})
      if (u[next] < u[v] && u[next] >= floor) stack.emplace_back(next, floor);
  }

  // Forward continuations: nodes whose chain passes through a flagged simplex.
  std::unordered_map<int64_t, char> flagged_edges;
  for (int t : flagged) {
    const auto& tri = mesh.triangles[t];
    for (int e = 0; e < 3; ++e) flagged_edges[edge_key(tri[e], tri[(e + 1) % 3])] = 1;
  }
  std::vector<int> order(nn);
  for (int v = 0; v < nn; ++v) order[v] = v;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return u[a] < u[b]; });
  std::vector<char> downstream(nn, 0);
  for (int v : order) {
    const Predecessor& p = values.predecessors[v];
    if (!p.valid()) continue;
    if (flagged_edges.count(edge_key(p.edge_a, p.edge_b)) || downstream[p.edge_a] ||
        downstream[p.edge_b])
      downstream[v] = 1;
  }
  for (int v = 0; v < nn; ++v)
    if (downstream[v]) region.marked_nodes[v] = 1;

  for (int v = 0; v < nn; ++v) {
    if (!region.marked_nodes[v]) continue;
    for (int s = mesh.patch_offsets[v]; s < mesh.patch_offsets[v + 1]; ++s)
      region.marked_tris[mesh.patch_triangles[s]] = 1;
  }
  for (int t : flagged) region.marked_tris[t] = 1;
  return region;
}

CertifyReport certify_destination(const ValueField& values, const TriMesh& mesh,
                                  const WindField& field, double airspeed,
                                  const TrustRegion& region, const Point2& destination) {
  if ((destination - mesh.origin).norm() <= mesh.ball_radius)
    throw std::domain_error("destination lies inside the origin set");
  const int tri = mesh.locate(destination);
  if (tri < 0) throw std::domain_error("destination outside the meshed domain");

  CertifyReport report;
  report.epsilon = region.epsilon;
  report.trajectory =
      backtrack(values, mesh, field, airspeed, destination, &region.marked_tris);
  report.arrival_time = report.trajectory.arrival_time;
  report.safe = !region.marked_tris[tri] && !report.trajectory.crosses_marked;

  double nearest = std::numeric_limits<double>::infinity();
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    if (!region.marked_tris[t]) continue;
    const auto& tv = mesh.triangles[t];
    if (mesh.barycentric(t, destination).minCoeff() >= 0.0) {
      nearest = 0.0;
      break;
    }
    for (int e = 0; e < 3; ++e)
      nearest = std::min(nearest, point_segment_distance(destination, mesh.nodes[tv[e]],
                                                         mesh.nodes[tv[(e + 1) % 3]]));
  }
  report.nearest_marked_distance = std::isfinite(nearest) ? nearest : -1.0;
  return report;
}

std::vector<char> dilate_mask(const TriMesh& mesh, const std::vector<char>& mask, int rings) {
  std::vector<char> out = mask;
  for (int r = 0; r < rings; ++r) {
    std::vector<char> nodes(mesh.num_nodes(), 0);
    for (int t = 0; t < mesh.num_triangles(); ++t)
      if (out[t])
        for (int v : mesh.triangles[t]) nodes[v] = 1;
    std::vector<char> grown = out;
    for (int v = 0; v < mesh.num_nodes(); ++v) {
      if (!nodes[v]) continue;
      for (int s = mesh.patch_offsets[v]; s < mesh.patch_offsets[v + 1]; ++s)
        grown[mesh.patch_triangles[s]] = 1;
    }
    out.swap(grown);
  }
  return out;
}

}  // namespace zermelo
