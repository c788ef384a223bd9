#pragma once

#include <Eigen/Dense>

namespace zermelo {

using Point2 = Eigen::Vector2d;
using Vector2 = Eigen::Vector2d;
using Matrix2 = Eigen::Matrix2d;

// Counterclockwise rotation by 90 degrees.
inline Vector2 perp(const Vector2& v) { return Vector2(-v.y(), v.x()); }

}  // namespace zermelo
