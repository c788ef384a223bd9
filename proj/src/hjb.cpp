#include "zermelo/hjb.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "zermelo/numerics.hpp"

namespace zermelo {

namespace {

// Cubic spline through (angles, values): natural for an open arc, periodic
// for the full circle. Returns the nodal second derivatives.
std::vector<double> spline_second_derivatives(const std::vector<double>& t,
                                              const std::vector<double>& y, bool closed) {
  const int k = static_cast<int>(t.size());
  if (k < 3) return std::vector<double>(k, 0.0);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
  auto gap = [&](int i) {  // spacing of interval i -> i+1 (wrapping when closed)
    if (i + 1 < k) return t[i + 1] - t[i];
    return t[0] + 2.0 * M_PI - t[k - 1];
  };
  auto val = [&](int i) { return y[(i + k) % k]; };
  if (closed) {
    for (int i = 0; i < k; ++i) {
      const int prev = (i + k - 1) % k;
      const double hp = gap(prev), hi = gap(i);
      A(i, prev) += hp / 6.0;
      A(i, i) += (hp + hi) / 3.0;
      A(i, (i + 1) % k) += hi / 6.0;
      rhs(i) = (val(i + 1) - val(i)) / hi - (val(i) - val(i - 1)) / hp;
    }
  } else {
    A(0, 0) = 1.0;
    A(k - 1, k - 1) = 1.0;
    for (int i = 1; i + 1 < k; ++i) {
      const double hp = t[i] - t[i - 1], hi = t[i + 1] - t[i];
      A(i, i - 1) = hp / 6.0;
      A(i, i) = (hp + hi) / 3.0;
      A(i, i + 1) = hi / 6.0;
      rhs(i) = (y[i + 1] - y[i]) / hi - (y[i] - y[i - 1]) / hp;
    }
  }
  Eigen::VectorXd m = A.partialPivLu().solve(rhs);
  return std::vector<double>(m.data(), m.data() + k);
}

struct SplineEval {
  double value;
  double derivative;
};

SplineEval eval_spline(const std::vector<double>& t, const std::vector<double>& y,
                       const std::vector<double>& m, bool closed, double theta) {
  const int k = static_cast<int>(t.size());
  if (k == 1) return {y[0], 0.0};
  double q = theta;
  if (closed) {
    while (q < t[0]) q += 2.0 * M_PI;
    while (q >= t[0] + 2.0 * M_PI) q -= 2.0 * M_PI;
  } else {
    q = std::clamp(q, t[0], t[k - 1]);
  }
  int i = int(std::upper_bound(t.begin(), t.end(), q) - t.begin()) - 1;
  i = std::clamp(i, 0, closed ? k - 1 : k - 2);
  const double t0 = t[i];
  const double h = (i + 1 < k) ? t[i + 1] - t[i] : t[0] + 2.0 * M_PI - t[k - 1];
  const double y0 = y[i], y1 = y[(i + 1) % k];
  const double m0 = m[i], m1 = m[(i + 1) % k];
  const double u = q - t0, v = h - u;
  SplineEval out;
  out.value = m0 * v * v * v / (6.0 * h) + m1 * u * u * u / (6.0 * h) +
              (y0 - m0 * h * h / 6.0) * v / h + (y1 - m1 * h * h / 6.0) * u / h;
  out.derivative = -m0 * v * v / (2.0 * h) + m1 * u * u / (2.0 * h) + (y1 - y0) / h -
                   (m1 - m0) * h / 6.0;
  return out;
}

double lerp(double a, double b, double s) { return a + s * (b - a); }

// Nodal minimum over the far edges of `node`, pruning edges that cannot beat
// `init_best`. Wind is frozen at the node.
HopfLaxResult nodal_minimum(const TriMesh& mesh, const FrozenWind& wind,
                            const std::vector<double>& u, int node, double init_best) {
  const int lo = mesh.far_offsets[node], hi = mesh.far_offsets[node + 1];
  if (lo == hi) throw std::runtime_error("nodal update on a node with an empty patch");
  const Point2& x = mesh.nodes[node];
  HopfLaxResult best;
  best.value = init_best;
  for (int s = lo; s < hi; ++s) {
    const int a = mesh.far_edges[s][0], b = mesh.far_edges[s][1];
    const EdgeMinimum em =
        minimize_over_edge(x, wind, mesh.nodes[a], mesh.nodes[b], u[a], u[b], best.value);
    if (em.value < best.value) {
      best.value = em.value;
      best.predecessor = {a, b, em.s, lerp(u[a], u[b], em.s)};
    }
  }
  return best;
}

}  // namespace

double BoundaryOracle::value_at_node(int mesh_node) const {
  return values[index_of.at(mesh_node)];
}

Vector2 BoundaryOracle::tangential_gradient_at_node(int mesh_node) const {
  const int i = index_of.at(mesh_node);
  const double theta = angles[i];
  return slopes[i] * Vector2(-std::sin(theta), std::cos(theta));
}

double BoundaryOracle::value_at_angle(double theta) const {
  return eval_spline(angles, values, spline_m, closed, theta).value;
}

double BoundaryOracle::slope_at_angle(double theta) const {
  return eval_spline(angles, values, spline_m, closed, theta).derivative / radius;
}

Vector2 BoundaryOracle::tangential_gradient_at_angle(double theta) const {
  return slope_at_angle(theta) * Vector2(-std::sin(theta), std::cos(theta));
}

Point2 BoundaryOracle::point_at_angle(double theta) const {
  return origin + radius * Point2(std::cos(theta), std::sin(theta));
}

Vector2 BoundaryOracle::normal_at_angle(double theta) const {
  return Vector2(std::cos(theta), std::sin(theta));
}

BoundaryOracle build_oracle_from_samples(const TriMesh& mesh, const std::vector<int>& node_ids,
                                         const std::vector<double>& values) {
  if (node_ids.empty()) throw std::invalid_argument("boundary oracle needs at least one node");
  BoundaryOracle oracle;
  oracle.origin = mesh.origin;
  oracle.radius = mesh.ball_radius;

  std::vector<int> perm(node_ids.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<double> theta(node_ids.size());
  for (size_t i = 0; i < node_ids.size(); ++i) {
    const Vector2 d = mesh.nodes[node_ids[i]] - mesh.origin;
    theta[i] = std::atan2(d.y(), d.x());
  }
  std::sort(perm.begin(), perm.end(), [&](int a, int b) { return theta[a] < theta[b]; });

  for (int i : perm) {
    oracle.node_ids.push_back(node_ids[i]);
    oracle.angles.push_back(theta[i]);
    oracle.values.push_back(values[i]);
  }
  for (size_t i = 0; i < oracle.node_ids.size(); ++i)
    oracle.index_of[oracle.node_ids[i]] = static_cast<int>(i);

  // Distinguish the full ring from a clipped arc by the largest angular gap.
  double max_gap = oracle.angles.front() + 2.0 * M_PI - oracle.angles.back();
  for (size_t i = 1; i < oracle.angles.size(); ++i)
    max_gap = std::max(max_gap, oracle.angles[i] - oracle.angles[i - 1]);
  const double spacing = 2.0 * M_PI / double(oracle.angles.size());
  oracle.closed = max_gap < 3.0 * spacing;

  oracle.spline_m =
      spline_second_derivatives(oracle.angles, oracle.values, oracle.closed);
  oracle.slopes.resize(oracle.values.size());
  for (size_t i = 0; i < oracle.values.size(); ++i)
    oracle.slopes[i] =
        eval_spline(oracle.angles, oracle.values, oracle.spline_m, oracle.closed,
                    oracle.angles[i])
            .derivative /
        oracle.radius;
  return oracle;
}

Point2 predecessor_point(const TriMesh& mesh, const ValueField& field, int node) {
  const Predecessor& p = field.predecessors[node];
  if (!p.valid()) throw std::runtime_error("node has no minimizer record");
  return mesh.nodes[p.edge_a] + p.s * (mesh.nodes[p.edge_b] - mesh.nodes[p.edge_a]);
}

Vector2 inflow_direction(const TriMesh& mesh, const ValueField& field, int node) {
  const Vector2 d = mesh.nodes[node] - predecessor_point(mesh, field, node);
  const double len = d.norm();
  if (len < 1e-300) throw std::runtime_error("degenerate inflow direction");
  return d / len;
}

EdgeMinimum minimize_over_edge(const Point2& x, const FrozenWind& wind, const Point2& a,
                               const Point2& b, double ua, double ub, double prune_above) {
  const double reach = std::min(ua, ub) +
                       point_segment_distance(x, a, b) / wind.max_ground_speed();
  if (reach >= prune_above) return {};

  const Vector2 ab = b - a;
  auto phi = [&](double s) {
    const Point2 y = a + s * ab;
    const Vector2 d = x - y;
    const double len = d.norm();
    if (len < 1e-300) return lerp(ua, ub, s);
    return lerp(ua, ub, s) + len * wind.slowness(d / len);
  };

  int best_k = 0;
  double best_v = phi(0.0);
  for (int k = 1; k <= 16; ++k) {
    const double v = phi(k / 16.0);
    if (v < best_v) {
      best_v = v;
      best_k = k;
    }
  }
  const double lo = std::max(0.0, (best_k - 1) / 16.0);
  const double hi = std::min(1.0, (best_k + 1) / 16.0);
  auto [s, v] = golden_section(phi, lo, hi, 1e-12);
  if (best_v < v) return {best_v, best_k / 16.0};
  return {v, s};
}

HopfLaxResult hopf_lax_update(const TriMesh& mesh, const WindField& field, double airspeed,
                              const ValueField& values, int node) {
  if (mesh.node_class[node] == NodeClass::OriginBoundary)
    throw std::invalid_argument("nodal update requested on an origin-boundary node");
  const FrozenWind wind(eval_wind(field, mesh.nodes[node]), airspeed);
  return nodal_minimum(mesh, wind, values.values, node,
                       std::numeric_limits<double>::infinity());
}

double sentinel_value(double airspeed, double c0) {
  return 10.0 * std::sqrt(2.0) / (airspeed - c0);
}

ValueField solve(const TriMesh& mesh, const WindField& field, double airspeed,
                 const BoundaryOracle& g, double tol, SweepScheme scheme, int max_sweeps) {
  const int nn = mesh.num_nodes();
  const double c0 = bounds(field).speed;
  if (!(c0 < airspeed))
    throw std::domain_error("wind bound must stay below airspeed");
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");

  const double sentinel = sentinel_value(airspeed, c0);

  ValueField out;
  out.tolerance = tol;
  out.values.assign(nn, sentinel);
  out.predecessors.assign(nn, Predecessor{});

  std::vector<int> updatable;
  for (int v = 0; v < nn; ++v) {
    if (mesh.node_class[v] == NodeClass::OriginBoundary) {
      auto it = g.index_of.find(v);
      if (it == g.index_of.end())
        throw std::invalid_argument("boundary oracle does not cover all origin nodes");
      out.values[v] = g.values[it->second];
    } else {
      updatable.push_back(v);
    }
  }

  // The wind is stationary: freeze one sample per node up front.
  std::vector<FrozenWind> wind;
  wind.reserve(nn);
  for (int v = 0; v < nn; ++v) wind.emplace_back(eval_wind(field, mesh.nodes[v]), airspeed);

  std::vector<double>& u = out.values;
  std::vector<char> active(nn, 0), next_active(nn, 0);
  for (int v : updatable) active[v] = 1;
  std::vector<int> order = updatable;
  std::vector<double> scratch;
  if (scheme == SweepScheme::Jacobi) scratch = u;

  SolveReport& report = out.report;
  bool converged = false;
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    double scale = 0.0;
    for (int v = 0; v < nn; ++v)
      if (u[v] < 0.9 * sentinel) scale = std::max(scale, std::abs(u[v]));
    if (scale == 0.0) scale = 1.0;
    const double activity = 0.01 * tol * scale;

    if (scheme == SweepScheme::GaussSeidel && (sweep - 1) % 10 == 0) {
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return u[a] < u[b]; });
    }

    std::fill(next_active.begin(), next_active.end(), 0);
    double max_change = 0.0;

    const bool jacobi = scheme == SweepScheme::Jacobi;
    if (jacobi) scratch = u;
    const std::vector<double>& read = jacobi ? scratch : u;

    for (int v : order) {
      if (!active[v]) continue;
      const HopfLaxResult r = nodal_minimum(mesh, wind[v], read, v, u[v]);
      if (r.value > u[v]) report.monotonicity_violations++;
      if (r.value < u[v]) {
        const double change = u[v] - r.value;
        u[v] = r.value;
        max_change = std::max(max_change, change);
        if (change > activity) {
          next_active[v] = 1;
          for (int s = mesh.neighbor_offsets[v]; s < mesh.neighbor_offsets[v + 1]; ++s)
            next_active[mesh.neighbors[s]] = 1;
        }
      }
    }
    for (int v = 0; v < nn; ++v)
      if (mesh.node_class[v] == NodeClass::OriginBoundary) next_active[v] = 0;
    active.swap(next_active);

    report.sweeps = sweep;
    report.final_residual = max_change / scale;
    report.residual_history.push_back(report.final_residual);
    if (max_change <= 0.5 * tol * scale) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw SolveError("nodal sweeps did not converge within the sweep cap", report);

  // One more full pass at the fixed point to populate the minimizer records.
  double scale = 0.0;
  for (int v = 0; v < nn; ++v)
    if (u[v] < 0.9 * sentinel) scale = std::max(scale, std::abs(u[v]));
  for (int v : updatable) {
    const HopfLaxResult r = nodal_minimum(mesh, wind[v], u, v, u[v] + 10.0 * tol * scale);
    if (!r.predecessor.valid())
      throw SolveError("fixed point lost its minimizer record", report);
    u[v] = r.value;
    out.predecessors[v] = r.predecessor;
  }
  return out;
}

double eval_value(const ValueField& values, const TriMesh& mesh, const Point2& x) {
  const int t = mesh.locate(x);
  if (t < 0)
    throw std::domain_error("query point outside the meshed region");
  const Eigen::Vector3d l = mesh.barycentric(t, x);
  const auto& tri = mesh.triangles[t];
  return l[0] * values.values[tri[0]] + l[1] * values.values[tri[1]] +
         l[2] * values.values[tri[2]];
}

}  // namespace zermelo
