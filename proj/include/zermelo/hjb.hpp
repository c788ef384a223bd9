#pragma once

#include <limits>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "zermelo/kinematics.hpp"
#include "zermelo/trimesh.hpp"
#include "zermelo/windfield.hpp"

namespace zermelo {

/// Boundary data on the origin circle: arrival times at the circle nodes and
/// a spline through them for tangential derivatives and off-node queries.
struct BoundaryOracle {
  Point2 origin = Point2::Zero();
  double radius = 0.0;
  bool closed = false;  // full circle vs an arc clipped by the box

  std::vector<int> node_ids;     // origin-boundary mesh nodes, sorted by angle
  std::vector<double> angles;    // angle of each node around the origin
  std::vector<double> values;    // g at the nodes
  std::vector<double> slopes;    // dg/ds at the nodes, s = arc length

  std::unordered_map<int, int> index_of;  // mesh node -> position

  // Cubic spline coefficients in the angle parameter (second derivatives).
  std::vector<double> spline_m;

  double value_at_node(int mesh_node) const;
  Vector2 tangential_gradient_at_node(int mesh_node) const;

  double value_at_angle(double theta) const;
  double slope_at_angle(double theta) const;  // dg/ds
  Vector2 tangential_gradient_at_angle(double theta) const;
  Point2 point_at_angle(double theta) const;
  Vector2 normal_at_angle(double theta) const;
};

/// Build the oracle from per-node samples of g on the origin circle; the
/// tangential slopes come from spline differentiation along the circle.
BoundaryOracle build_oracle_from_samples(const TriMesh& mesh,
                                         const std::vector<int>& node_ids,
                                         const std::vector<double>& values);

/// Nodal minimizer record: the carrying far edge, the barycentric coordinate
/// along it, and the interpolated value at the minimizer point.
struct Predecessor {
  int edge_a = -1;
  int edge_b = -1;
  double s = 0.0;
  double value = std::numeric_limits<double>::infinity();

  bool valid() const { return edge_a >= 0; }
};

struct SolveReport {
  int sweeps = 0;
  double final_residual = 0.0;
  std::vector<double> residual_history;  // max change per sweep
  int monotonicity_violations = 0;
};

/// Nodal arrival times with per-node minimizer records.
struct ValueField {
  std::vector<double> values;
  std::vector<Predecessor> predecessors;
  SolveReport report;
  double tolerance = 0.0;
};

/// Minimizer point on the carrying edge of a node, and the unit direction of
/// the discrete characteristic flowing into the node.
Point2 predecessor_point(const TriMesh& mesh, const ValueField& field, int node);
Vector2 inflow_direction(const TriMesh& mesh, const ValueField& field, int node);

enum class SweepScheme { Jacobi, GaussSeidel };

struct SolveError : std::runtime_error {
  SolveError(const std::string& what, SolveReport r)
      : std::runtime_error(what), report(std::move(r)) {}
  SolveReport report;
};

struct EdgeMinimum {
  double value = std::numeric_limits<double>::infinity();
  double s = 0.0;
};

/// Minimum of  lerp(ua, ub, s) + |x - y(s)| / f(x, dir(s))  over the segment
/// y(s) = (1-s) a + s b, with the wind frozen at x: a coarse 17-point scan
/// followed by golden-section refinement of the bracketed best interval.
EdgeMinimum minimize_over_edge(const Point2& x, const FrozenWind& wind, const Point2& a,
                               const Point2& b, double ua, double ub,
                               double prune_above = std::numeric_limits<double>::infinity());

struct HopfLaxResult {
  double value = std::numeric_limits<double>::infinity();
  Predecessor predecessor;
};

/// One nodal update: the exact-to-tolerance minimum over all far edges of the
/// node's patch, with the argmin record.
HopfLaxResult hopf_lax_update(const TriMesh& mesh, const WindField& field, double airspeed,
                              const ValueField& values, int node);

/// Initialization value for nodes not yet reached by any sweep.
double sentinel_value(double airspeed, double c0);

/// Fixed point of the nodal update operator by sweeping: plain Jacobi sweeps
/// over a snapshot, or Gauss-Seidel in approximately causal (ascending value)
/// order. Stops when the largest relative nodal change drops below tol.
ValueField solve(const TriMesh& mesh, const WindField& field, double airspeed,
                 const BoundaryOracle& g, double tol = 1e-10,
                 SweepScheme scheme = SweepScheme::GaussSeidel, int max_sweeps = 100000);

/// Piecewise-linear interpolation of the nodal field. Throws outside the
/// meshed region (including inside the origin ball).
double eval_value(const ValueField& values, const TriMesh& mesh, const Point2& x);

}  // namespace zermelo
