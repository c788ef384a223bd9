#pragma once

#include <optional>
#include <vector>

#include "zermelo/hjb.hpp"
#include "zermelo/trimesh.hpp"
#include "zermelo/windfield.hpp"

namespace zermelo {

/// Time-parametrized solution of the characteristic system, with optional
/// 4x4 Jacobians of (state, covector) with respect to the launch state.
struct Characteristic {
  std::vector<double> times;
  std::vector<Point2> states;
  std::vector<Vector2> covectors;
  std::vector<Eigen::Matrix4d> jacobians;
  Point2 launch_point = Point2::Zero();
  Vector2 launch_covector = Vector2::Zero();
  std::optional<double> exit_time;  // first sample outside the unit box

  double duration() const { return times.empty() ? 0.0 : times.back(); }
};

struct Trajectory {
  enum class Method { Backtrack, Shooting };
  std::vector<Point2> points;  // origin circle -> destination
  std::vector<double> times;
  double arrival_time = 0.0;
  Method method = Method::Backtrack;
  bool crosses_marked = false;
  std::vector<int> visited_triangles;
};

/// Covector scale mu > 0 solving H(xi, g_x + mu * nu) = 0, with nu the
/// outward circle normal at xi.
double mu_of_xi(const Point2& xi, const Vector2& g_x, const WindField& field, double airspeed,
                const Point2& origin);

/// Launch covector at circle angle theta: tangential oracle gradient plus the
/// normal component fixed by mu_of_xi.
Vector2 launch_covector(const BoundaryOracle& oracle, const WindField& field, double airspeed,
                        double theta);

/// Classical fixed-step RK4 integration of y' = H_p, p' = -H_x from `start`,
/// with p0 rescaled so that H = 0 holds at launch. Default step: T/2048.
Characteristic shoot(const Point2& start, const Vector2& p0, double duration,
                     const WindField& field, double airspeed, double step = 0.0,
                     bool stop_outside_box = true);

/// Arrival times on the origin circle by heading shooting from the origin
/// point: a 720-sample angular scan plus bracketed root refinement of the
/// signed angular miss per circle node. Tangential derivatives come from
/// spline differentiation along the circle.
BoundaryOracle boundary_oracle_g(const TriMesh& mesh, const WindField& field, double airspeed,
                                 const Point2& origin, double radius);

struct VariationalResult {
  Characteristic path;                   // carries the Jacobian flow
  std::optional<double> conjugate_time;  // first sign change of det [y_xi | y_t]
  std::vector<double> determinants;      // per sample, sign-normalized at launch
};

/// Jacobian flow along the characteristic launched at circle angle theta.
/// Second derivatives of H are central differences of the analytic gradients;
/// the tangential determinant column comes from a relaunched characteristic
/// at a small arc offset, the temporal column is H_p.
VariationalResult variational_flow(const BoundaryOracle& oracle, const WindField& field,
                                   double airspeed, double theta, double duration,
                                   double step = 0.0, bool stop_outside_box = true);

/// Focusing tail of one launch: the characteristic samples covering the last
/// `tail` time units before its first conjugate point.
struct ConjugateTail {
  double theta = 0.0;
  double conjugate_time = 0.0;
  std::vector<Point2> points;
};

/// Sweep the circle with paired launches (no Jacobian flow) and report the
/// focusing tail of every launch that develops a conjugate point inside the
/// box. Used to exclude nearly-conjugate neighborhoods from the regular
/// region.
std::vector<ConjugateTail> conjugate_scan(const BoundaryOracle& oracle, const WindField& field,
                                          double airspeed, int num_angles, double duration,
                                          double tail, double step = 0.0);

/// Discrete optimal path to a destination: a local nodal minimization seeds
/// the first hop inside the destination triangle, then the stored minimizer
/// records are walked edge by edge back to the origin circle.
Trajectory backtrack(const ValueField& values, const TriMesh& mesh, const WindField& field,
                     double airspeed, const Point2& destination,
                     const std::vector<char>* marked_triangles = nullptr);

struct ShotToDestination {
  Characteristic path;
  double arrival_time = 0.0;
  double miss_distance = 0.0;
  double launch_angle = 0.0;
};

/// Characteristic from the origin circle passing through a destination:
/// refinement of the launch angle around a hint (usually the backtracked
/// chain terminal), then one fine-step shot. When a guide polyline is given,
/// the branch is selected by corridor distance to it, which stays smooth in
/// the launch angle even when strong shear squeezes the hitting basin.
ShotToDestination shoot_to_destination(const BoundaryOracle& oracle, const WindField& field,
                                       double airspeed, const Point2& destination,
                                       double angle_hint, double time_hint,
                                       double fine_step = 0.0,
                                       const Trajectory* guide = nullptr);

}  // namespace zermelo
