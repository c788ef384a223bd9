#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "zermelo/types.hpp"

namespace zermelo {

/// Gaussian vortex with tangential speed profile
///   speed(r) = scale * gamma * (beta r / radius) * exp(-beta^2 r^2 / radius^2),
/// where r is the distance to the center. The default gamma = sqrt(2e)
/// normalizes the unscaled peak speed to 1, so `scale` is the peak wind speed.
/// spin = +1 turns counterclockwise, -1 clockwise.
struct Vortex {
  Point2 center{0.5, 0.5};
  int spin = -1;
  double radius = 1.0 / 3.0;
  double beta = 3.0;
  double gamma = default_gamma();
  double scale = 0.5;

  static double default_gamma() { return std::sqrt(2.0 * std::exp(1.0)); }
};

/// Certified global bounds of a wind field: speed >= sup |w(x)| and
/// rate >= sup of the spectral norm of the wind Jacobian.
struct WindBounds {
  double speed = 0.0;
  double rate = 0.0;
};

/// Stationary wind model: a constant field, a single Gaussian vortex, or a
/// superposition of vortices. Immutable after construction; evaluation is
/// pure, so concurrent use is safe.
class WindField {
 public:
  enum class Kind { Constant, Vortex, VortexArray };

  static WindField constant(const Vector2& w);
  static WindField vortex(const Vortex& v);
  static WindField vortex_array(std::vector<Vortex> vs);
  /// Array with caller-certified bounds (skips the sampling pass).
  static WindField vortex_array(std::vector<Vortex> vs, const WindBounds& declared);

  Kind kind() const { return kind_; }
  const Vector2& constant_vector() const { return constant_; }
  const std::vector<Vortex>& vortices() const { return vortices_; }
  const WindBounds& declared_bounds() const { return bounds_; }

 private:
  WindField() = default;

  Kind kind_ = Kind::Constant;
  Vector2 constant_{0.0, 0.0};
  std::vector<Vortex> vortices_;
  WindBounds bounds_;
};

Vector2 eval_wind(const WindField& field, const Point2& x);
Matrix2 eval_jacobian(const WindField& field, const Point2& x);

/// Certified upper bounds used by the error analysis. Exact for constant
/// fields and single vortices; sampled with a 5% safety margin for arrays.
WindBounds bounds(const WindField& field);

/// Drop vortices whose influence inside the given disk is below roundoff.
/// Used by short-range integrations near the origin ball.
WindField restrict_to_disk(const WindField& field, const Point2& center, double radius);

// Test problems: (a) constant crosswind, (b) single centered vortex,
// (c) 15-vortex array, (d) 70-vortex array.
WindField make_case_a();
WindField make_case_b(int spin = -1);
WindField make_case_c();
WindField make_case_d();
WindField make_case(char label, int spin = -1);

}  // namespace zermelo
