#include "zermelo/characteristics.hpp"

#include <algorithm>
#include <cmath>

#include "zermelo/numerics.hpp"

namespace zermelo {

namespace {

using State = Eigen::Vector4d;  // (y, p)

State characteristic_rhs(const WindField& field, double airspeed, const State& s) {
  const Point2 y(s[0], s[1]);
  const Vector2 p(s[2], s[3]);
  const HamiltonianGradients g = hamiltonian_gradients(y, p, field, airspeed);
  State d;
  d[0] = g.dp.x();
  d[1] = g.dp.y();
  d[2] = -g.dx.x();
  d[3] = -g.dx.y();
  return d;
}

State rk4_step(const WindField& field, double airspeed, const State& s, double dt) {
  const State k1 = characteristic_rhs(field, airspeed, s);
  const State k2 = characteristic_rhs(field, airspeed, s + 0.5 * dt * k1);
  const State k3 = characteristic_rhs(field, airspeed, s + 0.5 * dt * k2);
  const State k4 = characteristic_rhs(field, airspeed, s + dt * k3);
  return s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

bool in_box(const Point2& y) {
  return y.x() >= 0.0 && y.x() <= 1.0 && y.y() >= 0.0 && y.y() <= 1.0;
}

Vector2 normalize_launch(const Vector2& p0, const Vector2& wind, double airspeed) {
  const double denom = airspeed * p0.norm() + wind.dot(p0);
  if (!(denom > 1e-14)) throw std::invalid_argument("degenerate launch covector");
  return p0 / denom;
}

// Second derivatives of H by central differences of the analytic gradients.
Eigen::Matrix4d hamiltonian_hessian_blocks(const WindField& field, double airspeed,
                                           const Point2& y, const Vector2& p) {
  const double d = 1e-5;
  Matrix2 hpx, hpp, hxx, hxp;
  for (int j = 0; j < 2; ++j) {
    Vector2 e = Vector2::Zero();
    e[j] = d;
    const auto xp = hamiltonian_gradients(y + e, p, field, airspeed);
    const auto xm = hamiltonian_gradients(y - e, p, field, airspeed);
    hpx.col(j) = (xp.dp - xm.dp) / (2.0 * d);
    hxx.col(j) = (xp.dx - xm.dx) / (2.0 * d);
    const auto pp = hamiltonian_gradients(y, p + e, field, airspeed);
    const auto pm = hamiltonian_gradients(y, p - e, field, airspeed);
    hpp.col(j) = (pp.dp - pm.dp) / (2.0 * d);
    hxp.col(j) = (pp.dx - pm.dx) / (2.0 * d);
  }
  Eigen::Matrix4d m;
  m.topLeftCorner<2, 2>() = hpx;
  m.topRightCorner<2, 2>() = hpp;
  m.bottomLeftCorner<2, 2>() = -hxx;
  m.bottomRightCorner<2, 2>() = -hxp;
  return m;
}

struct BallCrossing {
  double time = 0.0;
  Point2 point = Point2::Zero();
  double angle = 0.0;
};

// Integrate from the origin point until the path crosses the circle of the
// given radius; the crossing is refined by cubic Hermite interpolation of the
// radius over the bracketing step.
BallCrossing integrate_until_radius(const WindField& field, double airspeed,
                                    const Point2& origin, double radius, const Vector2& p0,
                                    double dt) {
  State s;
  s << origin.x(), origin.y(), p0.x(), p0.y();
  const double t_cap = 10.0 * radius / (airspeed - bounds(field).speed);
  double t = 0.0;
  double r_prev = 0.0;
  while (t < t_cap) {
    const State s_next = rk4_step(field, airspeed, s, dt);
    const double r_next = (Point2(s_next[0], s_next[1]) - origin).norm();
    if (r_next >= radius) {
      // Hermite interpolation of r(t) over the bracketing step.
      auto radial_rate = [&](const State& q) {
        const Point2 y(q[0], q[1]);
        const State d = characteristic_rhs(field, airspeed, q);
        const double r = (y - origin).norm();
        return (y - origin).dot(Vector2(d[0], d[1])) / std::max(r, 1e-14);
      };
      const double r0 = r_prev, r1 = r_next;
      const double v0 = radial_rate(s), v1 = radial_rate(s_next);
      double tau = (radius - r0) / std::max(r1 - r0, 1e-300);  // in [0,1]
      for (int it = 0; it < 4; ++it) {
        const double h00 = (1 + 2 * tau) * (1 - tau) * (1 - tau);
        const double h10 = tau * (1 - tau) * (1 - tau);
        const double h01 = tau * tau * (3 - 2 * tau);
        const double h11 = tau * tau * (tau - 1);
        const double r = h00 * r0 + h10 * dt * v0 + h01 * r1 + h11 * dt * v1;
        const double dh00 = 6 * tau * (tau - 1);
        const double dh10 = (1 - tau) * (1 - 3 * tau);
        const double dh01 = -dh00;
        const double dh11 = tau * (3 * tau - 2);
        const double dr = dh00 * r0 + dh10 * dt * v0 + dh01 * r1 + dh11 * dt * v1;
        if (std::abs(dr) < 1e-300) break;
        tau -= (r - radius) / dr;
        tau = std::clamp(tau, 0.0, 1.0);
      }
      const State d0 = characteristic_rhs(field, airspeed, s);
      const State d1 = characteristic_rhs(field, airspeed, s_next);
      const double h00 = (1 + 2 * tau) * (1 - tau) * (1 - tau);
      const double h10 = tau * (1 - tau) * (1 - tau);
      const double h01 = tau * tau * (3 - 2 * tau);
      const double h11 = tau * tau * (tau - 1);
      BallCrossing out;
      out.time = t + tau * dt;
      for (int c = 0; c < 2; ++c)
        out.point[c] = h00 * s[c] + h10 * dt * d0[c] + h01 * s_next[c] + h11 * dt * d1[c];
      const Vector2 rel = out.point - origin;
      out.angle = std::atan2(rel.y(), rel.x());
      return out;
    }
    s = s_next;
    r_prev = r_next;
    t += dt;
  }
  throw std::runtime_error("characteristic failed to cross the origin circle");
}

// Bracketed root refinement (Illinois variant of regula falsi).
template <typename F>
double illinois(F&& f, double a, double b, double fa, double fb, double tol, int cap = 80) {
  double side = 0.0;
  for (int it = 0; it < cap; ++it) {
    const double c = (fa * b - fb * a) / (fa - fb);
    const double fc = f(c);
    if (std::abs(fc) < tol || std::abs(b - a) < 1e-14) return c;
    if ((fc > 0.0) == (fb > 0.0)) {
      b = c;
      fb = fc;
      if (side == -1.0) fa *= 0.5;
      side = -1.0;
    } else {
      a = c;
      fa = fc;
      if (side == 1.0) fb *= 0.5;
      side = 1.0;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

double mu_of_xi(const Point2& xi, const Vector2& g_x, const WindField& field, double airspeed,
                const Point2& origin) {
  const Vector2 rel = xi - origin;
  const double r = rel.norm();
  if (r < 1e-14) throw std::invalid_argument("boundary point coincides with the origin");
  const Vector2 nu = rel / r;
  const Vector2 w = eval_wind(field, xi);
  auto res = [&](double mu) { return hamiltonian((g_x + mu * nu).eval(), w, airspeed); };
  const double hi = 10.0 / (airspeed - bounds(field).speed);
  if (!(res(0.0) < 0.0) || !(res(hi) > 0.0))
    throw std::domain_error("no covector scale in the bracket; tangential data inconsistent");
  const double mu = bisect(res, 0.0, hi, 1e-13);
  return mu;
}

Vector2 launch_covector(const BoundaryOracle& oracle, const WindField& field, double airspeed,
                        double theta) {
  const Point2 xi = oracle.point_at_angle(theta);
  const Vector2 g_x = oracle.tangential_gradient_at_angle(theta);
  const double mu = mu_of_xi(xi, g_x, field, airspeed, oracle.origin);
  return g_x + mu * oracle.normal_at_angle(theta);
}

Characteristic shoot(const Point2& start, const Vector2& p0, double duration,
                     const WindField& field, double airspeed, double step,
                     bool stop_outside_box) {
  if (!(duration > 0.0)) throw std::invalid_argument("shot duration must be positive");
  if (step <= 0.0) step = duration / 2048.0;
  const int steps = std::max(1, int(std::ceil(duration / step)));
  const double dt = duration / steps;

  Characteristic c;
  c.launch_point = start;
  c.launch_covector = normalize_launch(p0, eval_wind(field, start), airspeed);

  State s;
  s << start.x(), start.y(), c.launch_covector.x(), c.launch_covector.y();
  c.times.reserve(steps + 1);
  c.states.reserve(steps + 1);
  c.covectors.reserve(steps + 1);
  auto record = [&](double t, const State& q) {
    c.times.push_back(t);
    c.states.emplace_back(q[0], q[1]);
    c.covectors.emplace_back(q[2], q[3]);
  };
  record(0.0, s);
  for (int k = 1; k <= steps; ++k) {
    s = rk4_step(field, airspeed, s, dt);
    if (Vector2(s[2], s[3]).norm() < 1e-8)
      throw std::runtime_error("covector collapse along the characteristic");
    record(k * dt, s);
    if (!in_box(Point2(s[0], s[1]))) {
      c.exit_time = k * dt;
      if (stop_outside_box) break;
    }
  }
  return c;
}

BoundaryOracle boundary_oracle_g(const TriMesh& mesh, const WindField& field, double airspeed,
                                 const Point2& origin, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("origin ball radius must be positive");
  const std::vector<int> ring = origin_boundary_nodes(mesh);
  if (ring.empty()) throw std::invalid_argument("mesh carries no origin-circle nodes");

  // Paths live inside the ball: drop far-away vortices for speed.
  const WindField local = restrict_to_disk(field, origin, 1.5 * radius);
  const double dt = radius / (512.0 * airspeed);
  const Vector2 w0 = eval_wind(local, origin);

  auto launch = [&](double alpha) {
    const Vector2 dir(std::cos(alpha), std::sin(alpha));
    return normalize_launch(dir, w0, airspeed);
  };
  auto cross = [&](double alpha) {
    return integrate_until_radius(local, airspeed, origin, radius, launch(alpha), dt);
  };

  const int scan_n = 720;
  std::vector<double> scan_angle(scan_n), scan_time(scan_n);
  for (int m = 0; m < scan_n; ++m) {
    const double alpha = -M_PI + 2.0 * M_PI * m / scan_n;
    const BallCrossing bc = cross(alpha);
    scan_angle[m] = bc.angle;
    scan_time[m] = bc.time;
  }

  std::vector<double> values(ring.size(), 0.0);
  for (size_t i = 0; i < ring.size(); ++i) {
    const Vector2 rel = mesh.nodes[ring[i]] - origin;
    const double target = std::atan2(rel.y(), rel.x());
    int best_m = -1;
    double best_gap = 1e30;
    for (int m = 0; m < scan_n; ++m) {
      const int m2 = (m + 1) % scan_n;
      const double f0 = wrap_angle(scan_angle[m] - target);
      const double f1 = wrap_angle(scan_angle[m2] - target);
      if (std::abs(f0) > 1.0 || std::abs(f1) > 1.0) continue;
      if ((f0 > 0.0) == (f1 > 0.0) && f0 != 0.0) continue;
      const double gap = std::min(std::abs(f0), std::abs(f1));
      if (gap < best_gap) {
        best_gap = gap;
        best_m = m;
      }
    }
    if (best_m < 0)
      throw std::runtime_error("no heading bracket for a circle node; heading scan failed");
    const double a0 = -M_PI + 2.0 * M_PI * best_m / scan_n;
    const double a1 = a0 + 2.0 * M_PI / scan_n;
    auto miss = [&](double alpha) { return wrap_angle(cross(alpha).angle - target); };
    const double f0 = wrap_angle(scan_angle[best_m] - target);
    const double f1 = wrap_angle(scan_angle[(best_m + 1) % scan_n] - target);
    double alpha_star = a0;
    if (f0 == 0.0)
      alpha_star = a0;
    else if (f1 == 0.0)
      alpha_star = a1;
    else
      alpha_star = illinois(miss, a0, a1, f0, f1, 1e-12);
    values[i] = cross(alpha_star).time;
  }
  return build_oracle_from_samples(mesh, ring, values);
}

VariationalResult variational_flow(const BoundaryOracle& oracle, const WindField& field,
                                   double airspeed, double theta, double duration, double step,
                                   bool stop_outside_box) {
  if (step <= 0.0) step = duration / 2048.0;
  const int steps = std::max(1, int(std::ceil(duration / step)));
  const double dt = duration / steps;

  VariationalResult out;
  Characteristic& c = out.path;
  c.launch_point = oracle.point_at_angle(theta);
  c.launch_covector = launch_covector(oracle, field, airspeed, theta);

  // Companion launch at a small arc offset for the tangential column.
  const double arc_offset = 1e-4;
  const double theta2 = theta + arc_offset / oracle.radius;
  const Point2 start2 = oracle.point_at_angle(theta2);
  const Vector2 p0_off = launch_covector(oracle, field, airspeed, theta2);

  State s, s2;
  s << c.launch_point.x(), c.launch_point.y(), c.launch_covector.x(), c.launch_covector.y();
  s2 << start2.x(), start2.y(), p0_off.x(), p0_off.y();
  Eigen::Matrix4d jac = Eigen::Matrix4d::Identity();

  double det_sign = 0.0;
  auto determinant = [&](const State& a, const State& b) {
    const Vector2 tangential = (Point2(b[0], b[1]) - Point2(a[0], a[1])) / arc_offset;
    const HamiltonianGradients g =
        hamiltonian_gradients(Point2(a[0], a[1]), Vector2(a[2], a[3]), field, airspeed);
    return tangential.x() * g.dp.y() - tangential.y() * g.dp.x();
  };

  auto record = [&](double t) {
    c.times.push_back(t);
    c.states.emplace_back(s[0], s[1]);
    c.covectors.emplace_back(s[2], s[3]);
    c.jacobians.push_back(jac);
    double d = determinant(s, s2);
    if (det_sign == 0.0 && d != 0.0) det_sign = d > 0.0 ? 1.0 : -1.0;
    out.determinants.push_back(d * det_sign);
  };
  record(0.0);

  for (int k = 1; k <= steps; ++k) {
    // Joint RK4 step of the state pair and the Jacobian flow.
    const auto f = [&](const State& q) { return characteristic_rhs(field, airspeed, q); };
    const auto m = [&](const State& q) {
      return hamiltonian_hessian_blocks(field, airspeed, Point2(q[0], q[1]), Vector2(q[2], q[3]));
    };
    const State k1 = f(s);
    const Eigen::Matrix4d j1 = m(s) * jac;
    const State q2 = s + 0.5 * dt * k1;
    const State k2 = f(q2);
    const Eigen::Matrix4d j2 = m(q2) * (jac + 0.5 * dt * j1);
    const State q3 = s + 0.5 * dt * k2;
    const State k3 = f(q3);
    const Eigen::Matrix4d j3 = m(q3) * (jac + 0.5 * dt * j2);
    const State q4 = s + dt * k3;
    const State k4 = f(q4);
    const Eigen::Matrix4d j4 = m(q4) * (jac + dt * j3);
    s = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    jac = jac + (dt / 6.0) * (j1 + 2.0 * j2 + 2.0 * j3 + j4);
    s2 = rk4_step(field, airspeed, s2, dt);
    record(k * dt);
    if (!in_box(Point2(s[0], s[1]))) {
      c.exit_time = k * dt;
      if (stop_outside_box) break;
    }
  }

  for (size_t k = 1; k < out.determinants.size(); ++k) {
    if (out.determinants[k] <= 0.0 && out.determinants[k - 1] > 0.0) {
      const double d0 = out.determinants[k - 1], d1 = out.determinants[k];
      const double t0 = c.times[k - 1], t1 = c.times[k];
      out.conjugate_time = (d1 == d0) ? t1 : t0 + (t1 - t0) * d0 / (d0 - d1);
      break;
    }
  }
  return out;
}

std::vector<ConjugateTail> conjugate_scan(const BoundaryOracle& oracle, const WindField& field,
                                          double airspeed, int num_angles, double duration,
                                          double tail, double step) {
  if (step <= 0.0) step = duration / 2048.0;
  const int steps = std::max(1, int(std::ceil(duration / step)));
  const double dt = duration / steps;
  const double arc_offset = 1e-4;

  double a0 = -M_PI, a1 = M_PI;
  if (!oracle.closed) {
    a0 = oracle.angles.front();
    a1 = oracle.angles.back();
  }

  std::vector<ConjugateTail> tails;
  for (int k = 0; k < num_angles; ++k) {
    const double theta =
        oracle.closed ? a0 + (a1 - a0) * k / num_angles
                      : a0 + (a1 - a0) * (k + 0.5) / num_angles;
    State s, s2;
    try {
      const Point2 y0 = oracle.point_at_angle(theta);
      const Vector2 p0 = launch_covector(oracle, field, airspeed, theta);
      const double theta2 = theta + arc_offset / oracle.radius;
      const Point2 y1 = oracle.point_at_angle(theta2);
      const Vector2 p1 = launch_covector(oracle, field, airspeed, theta2);
      s << y0.x(), y0.y(), p0.x(), p0.y();
      s2 << y1.x(), y1.y(), p1.x(), p1.y();
    } catch (const std::exception&) {
      continue;  // no admissible launch at this angle
    }

    auto det_of = [&](const State& a, const State& b) {
      const Vector2 tangential = (Point2(b[0], b[1]) - Point2(a[0], a[1])) / arc_offset;
      const HamiltonianGradients g =
          hamiltonian_gradients(Point2(a[0], a[1]), Vector2(a[2], a[3]), field, airspeed);
      return tangential.x() * g.dp.y() - tangential.y() * g.dp.x();
    };

    std::vector<Point2> pts{Point2(s[0], s[1])};
    std::vector<double> times{0.0};
    double sign = 0.0;
    double prev_det = 0.0;
    std::optional<double> t_conj;
    for (int q = 1; q <= steps; ++q) {
      s = rk4_step(field, airspeed, s, dt);
      s2 = rk4_step(field, airspeed, s2, dt);
      pts.emplace_back(s[0], s[1]);
      times.push_back(q * dt);
      double d = det_of(s, s2);
      if (sign == 0.0 && d != 0.0) sign = d > 0.0 ? 1.0 : -1.0;
      d *= sign;
      if (q > 1 && prev_det > 0.0 && d <= 0.0) {
        t_conj = times[q - 1] + dt * prev_det / (prev_det - d);
        break;
      }
      prev_det = d;
      if (!in_box(Point2(s[0], s[1]))) break;
    }
    if (!t_conj) continue;

    ConjugateTail ct;
    ct.theta = theta;
    ct.conjugate_time = *t_conj;
    for (size_t q = 0; q < pts.size(); ++q)
      if (times[q] >= *t_conj - tail) ct.points.push_back(pts[q]);
    tails.push_back(std::move(ct));
  }
  return tails;
}

Trajectory backtrack(const ValueField& values, const TriMesh& mesh, const WindField& field,
                     double airspeed, const Point2& destination,
                     const std::vector<char>* marked_triangles) {
  const int t0 = mesh.locate(destination);
  if (t0 < 0) {
    if ((destination - mesh.origin).norm() <= mesh.ball_radius)
      throw std::domain_error("destination lies inside the origin set");
    throw std::domain_error("destination outside the meshed domain");
  }

  Trajectory traj;
  traj.method = Trajectory::Method::Backtrack;
  traj.arrival_time = eval_value(values, mesh, destination);
  traj.visited_triangles.push_back(t0);

  std::vector<Point2> pts{destination};
  std::vector<double> ts{traj.arrival_time};

  const std::vector<double>& u = values.values;

  // Virtual first hop inside the destination triangle; after that the chain
  // walks the interpolated minimizer field: each step blends the stored
  // records of the containing triangle barycentrically, which keeps the
  // records' accuracy without the sideways rounding of a purely nodal walk.
  const auto& tri0 = mesh.triangles[t0];
  const FrozenWind wind(eval_wind(field, destination), airspeed);
  int ea = -1, eb = -1;
  double s_best = 0.0, v_best = std::numeric_limits<double>::infinity();
  for (int e = 0; e < 3; ++e) {
    const int a = tri0[e], b = tri0[(e + 1) % 3];
    const EdgeMinimum em =
        minimize_over_edge(destination, wind, mesh.nodes[a], mesh.nodes[b], u[a], u[b], v_best);
    if (em.value < v_best) {
      v_best = em.value;
      ea = a;
      eb = b;
      s_best = em.s;
    }
  }
  if (ea < 0) throw std::runtime_error("destination triangle has no admissible first hop");
  Point2 cur = mesh.nodes[ea] + s_best * (mesh.nodes[eb] - mesh.nodes[ea]);
  double cur_val = u[ea] + s_best * (u[eb] - u[ea]);
  pts.push_back(cur);
  ts.push_back(cur_val);

  const int hop_cap = mesh.num_triangles() + 16;
  for (int hop = 0;; ++hop) {
    if (hop >= hop_cap)
      throw std::runtime_error("minimizer chain exceeded the hop cap (cycle)");
    if ((cur - mesh.origin).norm() <= mesh.ball_radius + 0.6 * mesh.h) break;

    const int t = mesh.locate(cur);
    if (t < 0) throw std::runtime_error("minimizer chain left the meshed region");
    traj.visited_triangles.push_back(t);
    const Eigen::Vector3d lambda = mesh.barycentric(t, cur);

    Point2 next = Point2::Zero();
    double next_val = 0.0;
    double weight = 0.0;
    for (int e = 0; e < 3; ++e) {
      const int v = mesh.triangles[t][e];
      const double w_e = std::max(lambda[e], 0.0);
      weight += w_e;
      if (values.predecessors[v].valid()) {
        next += w_e * predecessor_point(mesh, values, v);
        next_val += w_e * values.predecessors[v].value;
      } else {
        // Circle nodes carry no record: they are their own chain end.
        next += w_e * mesh.nodes[v];
        next_val += w_e * u[v];
      }
    }
    next /= weight;
    next_val /= weight;
    if (!(next_val < cur_val + 1e-12))
      throw std::runtime_error("minimizer chain is not decreasing (cycle)");
    if ((next - cur).norm() < 0.05 * mesh.h) {
      // Stagnating blend (colliding records): drop to the best record.
      int best_v = -1;
      double best = cur_val - 1e-15;
      for (int v : mesh.triangles[t]) {
        const double val = values.predecessors[v].valid() ? values.predecessors[v].value : u[v];
        if (val < best) {
          best = val;
          best_v = v;
        }
      }
      if (best_v < 0) throw std::runtime_error("minimizer chain stalled (cycle)");
      next = values.predecessors[best_v].valid() ? predecessor_point(mesh, values, best_v)
                                                 : mesh.nodes[best_v];
      next_val = best;
    }
    cur = next;
    cur_val = next_val;
    pts.push_back(cur);
    ts.push_back(cur_val);
  }

  // Land exactly on the circle along the final inbound direction.
  {
    const Vector2 rel = cur - mesh.origin;
    if (rel.norm() > mesh.ball_radius + 1e-12) {
      pts.push_back(mesh.origin + mesh.ball_radius * rel / rel.norm());
      ts.push_back(std::max(0.0, cur_val - (rel.norm() - mesh.ball_radius)));
    }
  }

  std::reverse(pts.begin(), pts.end());
  std::reverse(ts.begin(), ts.end());
  traj.points = std::move(pts);
  traj.times = std::move(ts);
  if (marked_triangles) {
    for (int t : traj.visited_triangles)
      if ((*marked_triangles)[t]) {
        traj.crosses_marked = true;
        break;
      }
  }
  return traj;
}

ShotToDestination shoot_to_destination(const BoundaryOracle& oracle, const WindField& field,
                                       double airspeed, const Point2& destination,
                                       double angle_hint, double time_hint, double fine_step,
                                       const Trajectory* guide) {
  const double duration = time_hint * 1.25 + 0.1;

  auto closest = [&](const Characteristic& path) {
    double best = 1e300;
    double t_best = 0.0;
    for (size_t k = 1; k < path.states.size(); ++k) {
      const Point2 &a = path.states[k - 1], &b = path.states[k];
      const Vector2 ab = b - a;
      const double len2 = ab.squaredNorm();
      const double tau =
          len2 > 0.0 ? std::clamp((destination - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
      const double d = (destination - (a + tau * ab)).norm();
      if (d < best) {
        best = d;
        t_best = path.times[k - 1] + tau * (path.times[k] - path.times[k - 1]);
      }
    }
    return std::make_pair(best, t_best);
  };

  // Paths may graze the outside of the box (the nodal field follows the
  // boundary there; the free-flight excursion changes the time only to
  // second order), so the integration does not stop at the box edge.
  auto shot = [&](double theta, double step) {
    const Vector2 p0 = launch_covector(oracle, field, airspeed, theta);
    return shoot(oracle.point_at_angle(theta), p0, duration, field, airspeed, step, false);
  };

  const double coarse = duration / 2048.0;
  double center = angle_hint;
  double half_width = 0.15;
  if (guide && guide->points.size() >= 2) {
    // Corridor distance to the guide polyline: smooth in the launch angle
    // even when strong shear squeezes the endpoint-hitting basin below the
    // scan resolution, so it reliably pins the right branch.
    auto corridor = [&](double th) {
      const Characteristic path = shot(th, coarse);
      // The path clock starts at the circle: compare against the span the
      // destination arrival leaves after the boundary time.
      const double span = std::max(0.0, time_hint - oracle.value_at_angle(th));
      double worst = 0.0;
      const size_t stride = std::max<size_t>(1, path.states.size() / 64);
      for (size_t s = 0; s < path.states.size(); s += stride) {
        if (path.times[s] > span) break;
        double nearest = 1e300;
        for (size_t q = 1; q < guide->points.size(); ++q)
          nearest = std::min(nearest, point_segment_distance(path.states[s],
                                                             guide->points[q - 1],
                                                             guide->points[q]));
        worst = std::max(worst, nearest);
      }
      return worst;
    };
    int best_k = 0;
    double best_c = 1e300;
    const int scan_n = 40;
    for (int k = 0; k <= scan_n; ++k) {
      const double th = center - half_width + 2.0 * half_width * k / scan_n;
      const double c = corridor(th);
      if (c < best_c) {
        best_c = c;
        best_k = k;
      }
    }
    const double step = 2.0 * half_width / scan_n;
    const double lo = center - half_width + (best_k - 1) * step;
    center = golden_section(corridor, lo, lo + 2.0 * step, 1e-7).first;
    half_width = 2e-3;
  } else {
    // No guide: zooming scans. The first rounds pick the branch whose
    // arrival matches the hinted time (the hint carries the nodal field's
    // own discretization error, so late rounds minimize the pure miss).
    const int pre_n = 48;
    for (int round = 0; round < 4; ++round) {
      const bool branch_selection = round < 1;
      double best_theta = center;
      double best_time_gap = 1e300;
      double fallback_theta = center;
      double fallback_miss = 1e300;
      bool any_hit = false;
      for (int k = 0; k <= pre_n; ++k) {
        const double th = center - half_width + 2.0 * half_width * k / pre_n;
        const auto [miss, t_close] = closest(shot(th, coarse));
        if (miss < fallback_miss) {
          fallback_miss = miss;
          fallback_theta = th;
        }
        if (branch_selection && miss < 0.02) {
          const double gap = std::abs(oracle.value_at_angle(th) + t_close - time_hint);
          if (!any_hit || gap < best_time_gap) {
            any_hit = true;
            best_time_gap = gap;
            best_theta = th;
          }
        }
      }
      center = (branch_selection && any_hit) ? best_theta : fallback_theta;
      half_width = 4.0 * half_width / pre_n;
    }
  }
  auto refine = [&](double c0, double w0) {
    return golden_section([&](double th) { return closest(shot(th, coarse)).first; },
                          c0 - w0, c0 + w0, 1e-11)
        .first;
  };
  double theta_star = refine(center, half_width);

  if (fine_step <= 0.0) fine_step = std::min(duration / 8192.0, 1e-4);
  auto evaluate = [&](double th) {
    ShotToDestination out;
    out.launch_angle = th;
    out.path = shot(th, fine_step);
    const auto [miss, t_arr] = closest(out.path);
    out.miss_distance = miss;
    // Path time is measured from the circle; add the boundary arrival time.
    out.arrival_time = oracle.value_at_angle(th) + t_arr;
    return out;
  };
  ShotToDestination out = evaluate(theta_star);

  // A destination just past a weak crease is reached by a branch from a
  // different part of the circle: when the local search cannot reconcile the
  // hinted arrival, rescan the whole arc with zooming time-aware rounds.
  if (out.miss_distance > 2e-3 || std::abs(out.arrival_time - time_hint) > 0.025) {
    double a0 = -M_PI, a1 = M_PI;
    if (!oracle.closed) {
      a0 = oracle.angles.front();
      a1 = oracle.angles.back();
    }
    double c = 0.5 * (a0 + a1);
    double w = 0.5 * (a1 - a0);
    for (int round = 0; round < 5; ++round) {
      const int samples = round == 0 ? 720 : 48;
      const bool branch_selection = round < 1;
      double best_theta = c;
      double best_gap = 1e300;
      double fallback_theta = c;
      double fallback_miss = 1e300;
      bool any_hit = false;
      for (int k = 0; k <= samples; ++k) {
        const double th = c - w + 2.0 * w * k / samples;
        Characteristic path;
        try {
          path = shot(th, coarse);
        } catch (const std::exception&) {
          continue;
        }
        const auto [miss, t_close] = closest(path);
        if (miss < fallback_miss) {
          fallback_miss = miss;
          fallback_theta = th;
        }
        if (branch_selection && miss < 0.02) {
          const double gap = std::abs(oracle.value_at_angle(th) + t_close - time_hint);
          if (!any_hit || gap < best_gap) {
            any_hit = true;
            best_gap = gap;
            best_theta = th;
          }
        }
      }
      c = (branch_selection && any_hit) ? best_theta : fallback_theta;
      w = 4.0 * w / samples;
    }
    const ShotToDestination retry = evaluate(refine(c, w));
    const double score_first =
        out.miss_distance + 0.3 * std::abs(out.arrival_time - time_hint);
    const double score_retry =
        retry.miss_distance + 0.3 * std::abs(retry.arrival_time - time_hint);
    if (score_retry < score_first) out = retry;
  }
  return out;
}

}  // namespace zermelo
