#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "zermelo/types.hpp"

namespace zermelo {

inline double point_segment_distance(const Point2& x, const Point2& a, const Point2& b) {
  const Vector2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 < 1e-300) return (x - a).norm();
  const double t = std::clamp((x - a).dot(ab) / len2, 0.0, 1.0);
  return (x - (a + t * ab)).norm();
}

/// Golden-section minimization on [a, b] down to an interval of width `tol`.
/// Returns the midpoint of the final bracket and the objective there.
template <typename F>
std::pair<double, double> golden_section(F&& f, double a, double b, double tol) {
  static const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  while (b - a > tol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  const double s = 0.5 * (a + b);
  return {s, f(s)};
}

/// Bisection for a root of f on [a, b]; requires a sign change.
template <typename F>
double bisect(F&& f, double a, double b, double tol) {
  double fa = f(a);
  double fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0.0) == (fb > 0.0))
    throw std::domain_error("bisection bracket carries no sign change");
  while (b - a > tol) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if (fm == 0.0) return m;
    if ((fm > 0.0) == (fa > 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

inline double wrap_angle(double a) {
  while (a > M_PI) a -= 2.0 * M_PI;
  while (a <= -M_PI) a += 2.0 * M_PI;
  return a;
}

}  // namespace zermelo
