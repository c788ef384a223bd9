#include "zermelo/windfield.hpp"

#include <algorithm>
#include <stdexcept>

namespace zermelo {

namespace {

// Radial profile and its derivative. rho = beta r / radius.
double profile(const Vortex& v, double r) {
  const double rho = v.beta * r / v.radius;
  return v.scale * v.gamma * rho * std::exp(-rho * rho);
}

double profile_derivative(const Vortex& v, double r) {
  const double rho = v.beta * r / v.radius;
  return v.scale * v.gamma * (v.beta / v.radius) * (1.0 - 2.0 * rho * rho) *
         std::exp(-rho * rho);
}

Vector2 vortex_wind(const Vortex& v, const Point2& x) {
  const Vector2 d = x - v.center;
  const double r = d.norm();
  if (r < 1e-300) return Vector2::Zero();
  // profile(r)/r stays bounded as r -> 0; tangential direction is perp(d)/r.
  const double rho = v.beta * r / v.radius;
  const double slope = v.scale * v.gamma * (v.beta / v.radius) * std::exp(-rho * rho);
  return double(v.spin) * slope * perp(d);
}

Matrix2 vortex_jacobian(const Vortex& v, const Point2& x) {
  const Vector2 d = x - v.center;
  const double r = d.norm();
  const double peak_slope = v.scale * v.gamma * v.beta / v.radius;
  Matrix2 rot90;
  rot90 << 0.0, -1.0, 1.0, 0.0;
  if (r < 1e-12) return double(v.spin) * peak_slope * rot90;
  const Vector2 rad = d / r;
  const Vector2 tan = perp(rad);
  const Matrix2 jac = profile_derivative(v, r) * tan * rad.transpose() -
                      (profile(v, r) / r) * rad * tan.transpose();
  return double(v.spin) * jac;
}

void validate(const Vortex& v) {
  if (!(v.radius > 0.0) || !(v.beta > 0.0) || !(v.scale >= 0.0))
    throw std::invalid_argument("vortex parameters must satisfy R > 0, beta > 0, scale >= 0");
  if (v.spin != 1 && v.spin != -1)
    throw std::invalid_argument("vortex spin must be +1 or -1");
}

// Dense sampling of an array field over the unit box. Single vortices and
// constant fields carry exact bounds instead.
WindBounds sampled_bounds(const std::vector<Vortex>& vs) {
  const int n = 512;
  double max_speed = 0.0;
  double max_rate = 0.0;
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      const Point2 x(double(i) / n, double(j) / n);
      Vector2 w = Vector2::Zero();
      Matrix2 jac = Matrix2::Zero();
      for (const Vortex& v : vs) {
        w += vortex_wind(v, x);
        jac += vortex_jacobian(v, x);
      }
      max_speed = std::max(max_speed, w.norm());
      max_rate = std::max(max_rate, jac.operatorNorm());
    }
  }
  return {1.05 * max_speed, 1.05 * max_rate};
}

}  // namespace

WindField WindField::constant(const Vector2& w) {
  if (!w.allFinite()) throw std::invalid_argument("constant wind must be finite");
  WindField f;
  f.kind_ = Kind::Constant;
  f.constant_ = w;
  f.bounds_ = {w.norm(), 0.0};
  return f;
}

WindField WindField::vortex(const Vortex& v) {
  validate(v);
  WindField f;
  f.kind_ = Kind::Vortex;
  f.vortices_ = {v};
  // The unscaled profile peaks at gamma/sqrt(2e); both the profile slope and
  // speed/r are maximal at the center, giving the exact Jacobian bound.
  const double peak = v.scale * v.gamma / std::sqrt(2.0 * std::exp(1.0));
  f.bounds_ = {peak, v.scale * v.gamma * v.beta / v.radius};
  return f;
}

WindField WindField::vortex_array(std::vector<Vortex> vs) {
  if (vs.empty()) throw std::invalid_argument("vortex array must not be empty");
  for (const Vortex& v : vs) validate(v);
  WindField f;
  f.kind_ = Kind::VortexArray;
  f.vortices_ = std::move(vs);
  f.bounds_ = sampled_bounds(f.vortices_);
  return f;
}

WindField WindField::vortex_array(std::vector<Vortex> vs, const WindBounds& declared) {
  if (vs.empty()) throw std::invalid_argument("vortex array must not be empty");
  for (const Vortex& v : vs) validate(v);
  WindField f;
  f.kind_ = Kind::VortexArray;
  f.vortices_ = std::move(vs);
  f.bounds_ = declared;
  return f;
}

Vector2 eval_wind(const WindField& field, const Point2& x) {
  if (field.kind() == WindField::Kind::Constant) return field.constant_vector();
  Vector2 w = Vector2::Zero();
  for (const Vortex& v : field.vortices()) w += vortex_wind(v, x);
  return w;
}

Matrix2 eval_jacobian(const WindField& field, const Point2& x) {
  if (field.kind() == WindField::Kind::Constant) return Matrix2::Zero();
  Matrix2 jac = Matrix2::Zero();
  for (const Vortex& v : field.vortices()) jac += vortex_jacobian(v, x);
  return jac;
}

WindBounds bounds(const WindField& field) { return field.declared_bounds(); }

WindField restrict_to_disk(const WindField& field, const Point2& center, double radius) {
  if (field.kind() == WindField::Kind::Constant) return field;
  std::vector<Vortex> kept;
  for (const Vortex& v : field.vortices()) {
    // rho * exp(-rho^2) is below 1e-20 for rho = beta r / R > 7.
    const double influence = 7.0 * v.radius / v.beta;
    if ((v.center - center).norm() <= radius + influence) kept.push_back(v);
  }
  if (kept.empty()) return WindField::constant(Vector2::Zero());
  return WindField::vortex_array(std::move(kept), field.declared_bounds());
}

WindField make_case_a() {
  return WindField::constant(0.5 * Vector2(1.0, -2.0) / std::sqrt(5.0));
}

WindField make_case_b(int spin) {
  Vortex v;
  v.center = Point2(0.5, 0.5);
  v.spin = spin;
  v.radius = 1.0 / 3.0;
  v.scale = 0.5;
  return WindField::vortex(v);
}

WindField make_case_c() {
  std::vector<Vortex> vs;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 3; ++j) {
      Vortex v;
      v.center = Point2(0.1 + 0.2 * i, 0.17 + 0.2 * j);
      v.spin = ((i + j) % 2 == 0) ? 1 : -1;
      v.radius = 0.08;
      v.scale = 0.5;
      vs.push_back(v);
    }
  }
  return WindField::vortex_array(std::move(vs));
}

WindField make_case_d() {
  std::vector<Vortex> vs;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 7; ++j) {
      Vortex v;
      v.center = Point2(0.05 + 0.1 * i, 0.15 + 0.1 * j);
      v.spin = ((i + j) % 2 == 0) ? 1 : -1;
      v.radius = 0.045;
      v.scale = 0.5;
      vs.push_back(v);
    }
  }
  return WindField::vortex_array(std::move(vs));
}

WindField make_case(char label, int spin) {
  switch (label) {
    case 'a': return make_case_a();
    case 'b': return make_case_b(spin);
    case 'c': return make_case_c();
    case 'd': return make_case_d();
    default: throw std::invalid_argument("unknown test case label");
  }
}

}  // namespace zermelo
