#pragma once

// Shared test oracles, independent of the library implementation paths they
// check: brute-force minimizations, closed-form reference solutions, graph
// distances, and set distances.

#include <algorithm>
#include <queue>
#include <random>
#include <vector>

#include "zermelo/hjb.hpp"
#include "zermelo/kinematics.hpp"
#include "zermelo/numerics.hpp"
#include "zermelo/trimesh.hpp"
#include "zermelo/windfield.hpp"

namespace zermelo::test {

inline std::mt19937_64 rng(uint64_t seed = 0x5eed) { return std::mt19937_64(seed); }

inline Point2 random_point(std::mt19937_64& gen, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  return Point2(d(gen), d(gen));
}

inline Vector2 random_unit(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> d(-M_PI, M_PI);
  const double a = d(gen);
  return Vector2(std::cos(a), std::sin(a));
}

/// Brute-force Hamiltonian: minimize p.a * f(x, -a) over 4096 headings with
/// golden-section refinement of the best bracket.
inline double hamiltonian_brute_force(const Vector2& p, const Vector2& wind, double airspeed) {
  auto objective = [&](double alpha) {
    const Vector2 a(std::cos(alpha), std::sin(alpha));
    return p.dot(a) * ground_speed((-a).eval(), wind, airspeed);
  };
  const int n = 4096;
  int best = 0;
  double best_v = objective(0.0);
  for (int k = 1; k < n; ++k) {
    const double v = objective(2.0 * M_PI * k / n - M_PI);
    if (v < best_v) {
      best_v = v;
      best = k;
    }
  }
  const double center = 2.0 * M_PI * best / n - M_PI;
  const double width = 2.0 * M_PI / n;
  auto [alpha, v] = golden_section(objective, center - width, center + width, 1e-13);
  (void)alpha;
  return -std::min(v, best_v) - 1.0;
}

/// Arrival time under constant wind: the positive root of |x - x0 - w t| = v t.
inline double constant_wind_arrival(const Point2& x, const Point2& x0, const Vector2& w,
                                    double airspeed) {
  const Vector2 d = x - x0;
  const double denom = airspeed * airspeed - w.squaredNorm();
  const double along = d.dot(w);
  return (-along + std::sqrt(along * along + denom * d.squaredNorm())) / denom;
}

/// Multi-source Dijkstra over the mesh edge graph.
inline std::vector<double> graph_distance(const TriMesh& mesh, const std::vector<int>& sources) {
  std::vector<double> dist(mesh.num_nodes(), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
  for (int s : sources) {
    dist[s] = 0.0;
    heap.emplace(0.0, s);
  }
  while (!heap.empty()) {
    const auto [d, v] = heap.top();
    heap.pop();
    if (d > dist[v]) continue;
    for (int s = mesh.neighbor_offsets[v]; s < mesh.neighbor_offsets[v + 1]; ++s) {
      const int w = mesh.neighbors[s];
      const double nd = d + (mesh.nodes[v] - mesh.nodes[w]).norm();
      if (nd < dist[w]) {
        dist[w] = nd;
        heap.emplace(nd, w);
      }
    }
  }
  return dist;
}

/// One-sided Hausdorff distance from a polyline to a segment.
inline double hausdorff_to_segment(const std::vector<Point2>& pts, const Point2& a,
                                   const Point2& b) {
  double worst = 0.0;
  for (const Point2& p : pts) worst = std::max(worst, point_segment_distance(p, a, b));
  return worst;
}

/// Boundary oracle from an analytic function of the circle angle.
template <typename F>
BoundaryOracle make_oracle(const TriMesh& mesh, F&& g_of_angle) {
  const std::vector<int> ring = origin_boundary_nodes(mesh);
  std::vector<double> values(ring.size());
  for (size_t i = 0; i < ring.size(); ++i) {
    const Vector2 d = mesh.nodes[ring[i]] - mesh.origin;
    values[i] = g_of_angle(std::atan2(d.y(), d.x()));
  }
  return build_oracle_from_samples(mesh, ring, values);
}

}  // namespace zermelo::test
