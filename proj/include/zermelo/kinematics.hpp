#pragma once

#include <cmath>
#include <stdexcept>

#include "zermelo/types.hpp"
#include "zermelo/windfield.hpp"

namespace zermelo {

/// Pointwise speed query: unit direction of travel, wind at the query point,
/// and the vehicle airspeed. Requires |direction| = 1 and |wind| < airspeed.
struct SpeedQuery {
  Point2 x = Point2::Zero();
  Vector2 direction{1.0, 0.0};
  Vector2 wind{0.0, 0.0};
  double airspeed = 1.0;
};

namespace detail {

inline void check_model(double wind_norm2, double airspeed) {
  if (!(wind_norm2 < airspeed * airspeed))
    throw std::domain_error("wind speed must stay below airspeed");
}

}  // namespace detail

/// Ground speed in a given unit direction: the vehicle flies at constant
/// airspeed and the heading is chosen so that the resultant velocity points
/// along `direction`.
template <typename DerivedD, typename DerivedW>
double ground_speed(const Eigen::MatrixBase<DerivedD>& direction,
                    const Eigen::MatrixBase<DerivedW>& wind, double airspeed) {
  const double w2 = wind.squaredNorm();
  detail::check_model(w2, airspeed);
  const double along = wind.dot(direction);
  return std::sqrt(airspeed * airspeed - w2 + along * along) + along;
}

inline double ground_speed(const SpeedQuery& q) {
  if (std::abs(q.direction.norm() - 1.0) > 1e-12)
    throw std::invalid_argument("speed query direction must be a unit vector");
  return ground_speed(q.direction, q.wind, q.airspeed);
}

/// Reciprocal ground speed, rationalized to avoid cancellation when the wind
/// is a near tailwind:  (-w.d + sqrt(v^2 - |w|^2 + (w.d)^2)) / (v^2 - |w|^2).
template <typename DerivedD, typename DerivedW>
double slowness(const Eigen::MatrixBase<DerivedD>& direction,
                const Eigen::MatrixBase<DerivedW>& wind, double airspeed) {
  const double w2 = wind.squaredNorm();
  detail::check_model(w2, airspeed);
  const double along = wind.dot(direction);
  const double denom = airspeed * airspeed - w2;
  return (std::sqrt(denom + along * along) - along) / denom;
}

inline double slowness(const SpeedQuery& q) {
  if (std::abs(q.direction.norm() - 1.0) > 1e-12)
    throw std::invalid_argument("speed query direction must be a unit vector");
  return slowness(q.direction, q.wind, q.airspeed);
}

/// Wind frozen at one evaluation point; used by the nodal updates, which
/// evaluate many directions against the same wind sample.
struct FrozenWind {
  Vector2 wind;
  double airspeed;
  double denom;  // airspeed^2 - |wind|^2, positive by the model assumption

  FrozenWind(const Vector2& w, double v)
      : wind(w), airspeed(v), denom(v * v - w.squaredNorm()) {
    detail::check_model(w.squaredNorm(), v);
  }

  template <typename Derived>
  double slowness(const Eigen::MatrixBase<Derived>& direction) const {
    const double along = wind.dot(direction);
    return (std::sqrt(denom + along * along) - along) / denom;
  }

  double max_ground_speed() const { return airspeed + wind.norm(); }
};

/// Hamiltonian of the arrival-time equation. The minimum of p.a * f(x,-a)
/// over unit vectors a has the closed form -(v |p| + w.p), hence
///   H(x, p) = v |p| + w(x).p - 1,
/// which vanishes exactly on gradients of the value function.
template <typename DerivedP, typename DerivedW>
double hamiltonian(const Eigen::MatrixBase<DerivedP>& p,
                   const Eigen::MatrixBase<DerivedW>& wind, double airspeed) {
  detail::check_model(wind.squaredNorm(), airspeed);
  return airspeed * p.norm() + wind.dot(p) - 1.0;
}

inline double hamiltonian(const Point2& x, const Vector2& p, const WindField& field,
                          double airspeed) {
  return hamiltonian(p, eval_wind(field, x), airspeed);
}

struct HamiltonianGradients {
  Vector2 dx;  // gradient in the state
  Vector2 dp;  // gradient in the covector; the ground velocity along a characteristic
};

/// Gradients of the closed-form Hamiltonian. Rejects p = 0, where |p| is not
/// differentiable.
inline HamiltonianGradients hamiltonian_gradients(const Point2& x, const Vector2& p,
                                                  const WindField& field,
                                                  double airspeed) {
  const double pn = p.norm();
  if (pn < 1e-14) throw std::domain_error("degenerate covector in Hamiltonian gradient");
  HamiltonianGradients g;
  g.dp = airspeed * p / pn + eval_wind(field, x);
  g.dx = eval_jacobian(field, x).transpose() * p;
  return g;
}

/// Direction-uniform Lipschitz constant of the slowness in the state:
/// L = c1 * sqrt(v / (v - c0)^5).
inline double lipschitz_bound(double airspeed, double c0, double c1) {
  if (!(c0 < airspeed)) throw std::domain_error("speed bound must stay below airspeed");
  const double gap = airspeed - c0;
  return c1 * std::sqrt(airspeed / (gap * gap * gap * gap * gap));
}

}  // namespace zermelo
