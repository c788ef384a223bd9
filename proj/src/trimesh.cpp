#include "zermelo/trimesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "zermelo/numerics.hpp"

namespace zermelo {

namespace {

constexpr double kCullFactor = 0.7;  // protection annulus width in grid spacings

double signed_area(const Point2& a, const Point2& b, const Point2& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
}

struct Builder {
  int n = 0;
  double spacing = 0.0;
  Point2 x0 = Point2::Zero();
  double radius = 0.0;
  double buffer_radius = 0.0;  // aligned relief layer; 0 when not buffered
  bool symmetric = false;

  std::vector<double> xs, ys;
  std::vector<Point2> nodes;
  std::vector<int> mirror;  // node -> mirror partner, valid when symmetric
  std::vector<std::array<int, 3>> tris;
  std::vector<int> grid_id;     // (i, j) -> node index or -1
  std::vector<char> is_circle;  // per node
  int first_ring_node = -1;     // grid nodes come first, ring nodes after

  int gid(int i, int j) const { return grid_id[size_t(j) * n + i]; }

  int add_node(const Point2& p, bool circle) {
    nodes.push_back(p);
    is_circle.push_back(circle ? 1 : 0);
    mirror.push_back(static_cast<int>(nodes.size()) - 1);
    return static_cast<int>(nodes.size()) - 1;
  }

  void add_triangle(int a, int b, int c) {
    if (signed_area(nodes[a], nodes[b], nodes[c]) < 0.0) std::swap(b, c);
    if (signed_area(nodes[a], nodes[b], nodes[c]) <= 1e-18)
      throw std::runtime_error("degenerate triangle in mesh construction");
    tris.push_back({a, b, c});
  }
};

void make_grid_coordinates(Builder& b) {
  b.xs.resize(b.n);
  b.ys.resize(b.n);
  const double d = double(b.n - 1);
  for (int i = 0; i < b.n; ++i) b.xs[i] = double(i) / d;
  for (int j = 0; j < b.n; ++j) b.ys[j] = double(j) / d;
  if (b.symmetric) {
    // Pin the row coordinates to exact mirror pairs about y = 0.5.
    const int mid = (b.n - 1) / 2;
    b.ys[mid] = 0.5;
    for (int j = mid + 1; j < b.n; ++j) b.ys[j] = 1.0 - b.ys[b.n - 1 - j];
  }
}

void make_grid_nodes(Builder& b, double keep_radius) {
  std::vector<char> keep(size_t(b.n) * b.n, 1);
  if (keep_radius > 0.0) {
    for (int j = 0; j < b.n; ++j)
      for (int i = 0; i < b.n; ++i) {
        const Point2 p(b.xs[i], b.ys[j]);
        keep[size_t(j) * b.n + i] = (p - b.x0).norm() >= keep_radius ? 1 : 0;
      }
    if (b.symmetric) {
      // The cull decision is made on the upper half and copied down, so it
      // can never straddle the midline asymmetrically.
      const int mid = (b.n - 1) / 2;
      for (int j = 0; j < mid; ++j)
        for (int i = 0; i < b.n; ++i)
          keep[size_t(j) * b.n + i] = keep[size_t(b.n - 1 - j) * b.n + i];
    }
  }
  b.grid_id.assign(size_t(b.n) * b.n, -1);
  for (int j = 0; j < b.n; ++j)
    for (int i = 0; i < b.n; ++i)
      if (keep[size_t(j) * b.n + i]) b.grid_id[size_t(j) * b.n + i] = b.add_node(Point2(b.xs[i], b.ys[j]), false);
  if (b.symmetric) {
    for (int j = 0; j < b.n; ++j)
      for (int i = 0; i < b.n; ++i) {
        const int v = b.gid(i, j);
        if (v >= 0) b.mirror[v] = b.gid(i, b.n - 1 - j);
      }
  }
}

// Split each fully retained grid quad into two triangles. The diagonal
// alternates with the parity of (i + j), which keeps the pattern invariant
// under reflection about the middle row for odd n.
void make_grid_triangles(Builder& b) {
  for (int j = 0; j + 1 < b.n; ++j) {
    for (int i = 0; i + 1 < b.n; ++i) {
      const int v00 = b.gid(i, j), v10 = b.gid(i + 1, j);
      const int v01 = b.gid(i, j + 1), v11 = b.gid(i + 1, j + 1);
      if (v00 < 0 || v10 < 0 || v01 < 0 || v11 < 0) continue;
      if ((i + j) % 2 == 0) {
        b.add_triangle(v00, v10, v11);
        b.add_triangle(v00, v11, v01);
      } else {
        b.add_triangle(v00, v10, v01);
        b.add_triangle(v10, v11, v01);
      }
    }
  }
}

// Angular intervals of the circle around x0 that lie inside the closed box.
// Sets full=true (and returns {}) for an entirely interior circle.
std::vector<std::pair<double, double>> in_box_arcs(const Point2& x0, double r, bool& full) {
  std::vector<double> cuts;
  auto add_cos_cut = [&](double c) {
    if (c < -1.0 || c > 1.0) return;
    const double a = std::acos(std::clamp(c, -1.0, 1.0));
    cuts.push_back(a);
    cuts.push_back(-a);
  };
  add_cos_cut((0.0 - x0.x()) / r);
  add_cos_cut((1.0 - x0.x()) / r);
  auto add_sin_cut = [&](double s) {
    if (s < -1.0 || s > 1.0) return;
    const double a = std::asin(std::clamp(s, -1.0, 1.0));
    cuts.push_back(a);
    cuts.push_back(M_PI - a);
  };
  add_sin_cut((0.0 - x0.y()) / r);
  add_sin_cut((1.0 - x0.y()) / r);
  for (double& c : cuts) c = wrap_angle(c);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [](double a, double bb) { return std::abs(a - bb) < 1e-12; }),
             cuts.end());

  auto inside = [&](double a) {
    const Point2 p = x0 + r * Point2(std::cos(a), std::sin(a));
    const double eps = 1e-12;
    return p.x() >= -eps && p.x() <= 1.0 + eps && p.y() >= -eps && p.y() <= 1.0 + eps;
  };

  full = false;
  std::vector<std::pair<double, double>> arcs;
  if (cuts.empty()) {
    if (!inside(0.0)) throw std::invalid_argument("origin ball lies outside the domain");
    full = true;
    return arcs;
  }
  for (size_t k = 0; k < cuts.size(); ++k) {
    const double a = cuts[k];
    const double bnd = (k + 1 < cuts.size()) ? cuts[k + 1] : cuts[0] + 2.0 * M_PI;
    if (inside(0.5 * (a + bnd))) arcs.emplace_back(a, bnd);
  }
  if (arcs.empty()) throw std::invalid_argument("origin ball lies outside the domain");
  return arcs;
}

// Ring node with exact pinning: points meant to sit on the symmetry axis or
// on a box edge get their coordinate snapped there.
int add_ring_node(Builder& b, double angle, double radius, bool circle_flag) {
  double c = std::cos(angle), s = std::sin(angle);
  if (std::abs(c) < 1e-9) {
    c = 0.0;
    s = s > 0.0 ? 1.0 : -1.0;
  }
  if (std::abs(s) < 1e-9) {
    s = 0.0;
    c = c > 0.0 ? 1.0 : -1.0;
  }
  return b.add_node(b.x0 + radius * Point2(c, s), circle_flag);
}

struct RingChains {
  std::vector<int> circle;  // nodes on the exact circle
  std::vector<int> buffer;  // aligned relief layer; empty when not buffered
  bool closed = false;

  // Chain the ring zipper attaches to.
  const std::vector<int>& outer_chain() const { return buffer.empty() ? circle : buffer; }
};

void add_strip(Builder& b, const std::vector<int>& circle, const std::vector<int>& buffer,
               bool closed, std::vector<std::array<int, 3>>* emitted = nullptr) {
  const int segs = static_cast<int>(circle.size()) - (closed ? 0 : 1);
  auto cv = [&](int k) { return circle[k % circle.size()]; };
  auto bv = [&](int k) { return buffer[k % buffer.size()]; };
  for (int k = 0; k < segs; ++k) {
    b.add_triangle(cv(k), cv(k + 1), bv(k));
    b.add_triangle(cv(k + 1), bv(k + 1), bv(k));
    if (emitted) {
      emitted->push_back(b.tris[b.tris.size() - 2]);
      emitted->push_back(b.tris[b.tris.size() - 1]);
    }
  }
}

// Circle nodes (and the aligned buffer ring when enabled) for the general
// build, in counterclockwise angular order.
RingChains make_rings_plain(Builder& b) {
  bool full = false;
  auto arcs = in_box_arcs(b.x0, b.radius, full);
  RingChains rc;
  if (full) {
    rc.closed = true;
    const int m = std::max(8, int(std::lround(2.0 * M_PI * b.radius / b.spacing)));
    for (int k = 0; k < m; ++k)
      rc.circle.push_back(add_ring_node(b, 2.0 * M_PI * k / m - M_PI, b.radius, true));
    if (b.buffer_radius > 0.0)
      for (int k = 0; k < m; ++k)
        rc.buffer.push_back(add_ring_node(b, 2.0 * M_PI * k / m - M_PI, b.buffer_radius, false));
  } else {
    if (arcs.size() != 1)
      throw std::invalid_argument("origin ball clipped into multiple arcs is not supported");
    const auto [a0, a1] = arcs.front();
    const int m = std::max(4, int(std::lround((a1 - a0) * b.radius / b.spacing)));
    for (int k = 0; k <= m; ++k)
      rc.circle.push_back(add_ring_node(b, a0 + (a1 - a0) * k / m, b.radius, true));
    if (b.buffer_radius > 0.0)
      for (int k = 0; k <= m; ++k)
        rc.buffer.push_back(add_ring_node(b, a0 + (a1 - a0) * k / m, b.buffer_radius, false));
  }
  if (!rc.buffer.empty()) add_strip(b, rc.circle, rc.buffer, rc.closed);
  return rc;
}

// Upper-half rings for the symmetric build; strictly-upper nodes and the
// strip triangles are mirrored. Returns the upper chains.
RingChains make_rings_symmetric(Builder& b) {
  bool full = false;
  auto arcs = in_box_arcs(b.x0, b.radius, full);
  double top = M_PI;
  if (!full) {
    if (arcs.size() != 1)
      throw std::invalid_argument("origin ball clipped into multiple arcs is not supported");
    const auto [a0, a1] = arcs.front();
    if (std::abs(a0 + a1) > 1e-9)
      throw std::invalid_argument("clipped arc is not symmetric to the midline");
    top = a1;
  }
  RingChains rc;
  rc.closed = full;
  const int m = std::max(2, int(std::lround(top * b.radius / b.spacing)));
  const int last_mirrored = full ? m - 1 : m;  // theta = pi is its own mirror
  auto make_half_ring = [&](double radius, bool circle_flag) {
    std::vector<int> upper;
    for (int k = 0; k <= m; ++k)
      upper.push_back(add_ring_node(b, top * k / m, radius, circle_flag));
    for (int k = 1; k <= last_mirrored; ++k) {
      const Point2 up = b.nodes[upper[k]];
      const int lo = b.add_node(Point2(up.x(), 1.0 - up.y()), circle_flag);
      b.mirror[lo] = upper[k];
      b.mirror[upper[k]] = lo;
    }
    return upper;
  };
  rc.circle = make_half_ring(b.radius, true);
  if (b.buffer_radius > 0.0) {
    rc.buffer = make_half_ring(b.buffer_radius, false);
    std::vector<std::array<int, 3>> strip;
    add_strip(b, rc.circle, rc.buffer, false, &strip);
    for (const auto& tri : strip)
      b.add_triangle(b.mirror[tri[0]], b.mirror[tri[2]], b.mirror[tri[1]]);
  }
  return rc;
}

// Directed boundary edges of the current triangle set (edges whose reverse
// never occurs), as a successor map describing the boundary loops.
std::unordered_map<int, int> boundary_successors(const Builder& b) {
  std::unordered_map<int64_t, int> count;
  auto key = [](int u, int v) {
    return (int64_t(std::min(u, v)) << 32) | uint32_t(std::max(u, v));
  };
  for (const auto& t : b.tris)
    for (int e = 0; e < 3; ++e) count[key(t[e], t[(e + 1) % 3])]++;
  std::unordered_map<int, int> next;
  for (const auto& t : b.tris) {
    for (int e = 0; e < 3; ++e) {
      const int u = t[e], v = t[(e + 1) % 3];
      if (count[key(u, v)] == 1) {
        if (!next.emplace(u, v).second)
          throw std::runtime_error("pinched mesh boundary; refine the grid or grow the ball");
      }
    }
  }
  return next;
}

bool on_box_side(const Point2& p, const Point2& q) {
  const double eps = 1e-12;
  auto near = [&](double a, double v) { return std::abs(a - v) < eps; };
  return (near(p.x(), 0.0) && near(q.x(), 0.0)) || (near(p.x(), 1.0) && near(q.x(), 1.0)) ||
         (near(p.y(), 0.0) && near(q.y(), 0.0)) || (near(p.y(), 1.0) && near(q.y(), 1.0));
}

// The boundary run around the removed region: a closed loop of its own for an
// interior ball, or the non-box run of the single boundary loop when the ball
// is clipped by the box.
std::vector<int> extract_hole_chain(const Builder& b, bool& closed) {
  auto next = boundary_successors(b);
  const double near_r = b.radius + 4.0 * b.spacing;
  auto grid_near_ball = [&](int v) {
    return (b.first_ring_node < 0 || v < b.first_ring_node) &&
           (b.nodes[v] - b.x0).norm() < near_r;
  };

  std::unordered_map<int, char> seen;
  std::vector<std::vector<int>> loops;
  for (const auto& [u, v] : next) {
    (void)v;
    if (seen.count(u)) continue;
    std::vector<int> loop;
    int w = u;
    while (!seen.count(w)) {
      seen[w] = 1;
      loop.push_back(w);
      w = next.at(w);
    }
    loops.push_back(std::move(loop));
  }

  for (const auto& loop : loops) {
    if (std::all_of(loop.begin(), loop.end(), grid_near_ball)) {
      closed = true;
      return loop;
    }
  }
  for (const auto& loop : loops) {
    const int L = static_cast<int>(loop.size());
    auto hole_edge = [&](int k) {
      const int u = loop[k], v = loop[(k + 1) % L];
      return !on_box_side(b.nodes[u], b.nodes[v]) && grid_near_ball(u) && grid_near_ball(v);
    };
    int start = -1;
    for (int k = 0; k < L; ++k)
      if (hole_edge(k) && !hole_edge((k + L - 1) % L)) start = k;
    if (start < 0) continue;
    std::vector<int> chain{loop[start]};
    for (int k = start; hole_edge(k % L); ++k) chain.push_back(loop[(k + 1) % L]);
    if (chain.size() >= 2) {
      closed = false;
      return chain;
    }
  }
  throw std::runtime_error("failed to extract the ring boundary around the origin ball");
}

// Normalized cumulative arc-length parameters of a vertex chain.
std::vector<double> chain_params(const Builder& b, const std::vector<int>& chain, bool closed) {
  std::vector<double> t(chain.size() + (closed ? 1 : 0), 0.0);
  double acc = 0.0;
  for (size_t k = 1; k < chain.size(); ++k) {
    acc += (b.nodes[chain[k]] - b.nodes[chain[k - 1]]).norm();
    t[k] = acc;
  }
  if (closed) {
    acc += (b.nodes[chain.front()] - b.nodes[chain.back()]).norm();
    t[chain.size()] = acc;
  }
  for (double& v : t) v /= acc;
  return t;
}

// Counterclockwise total turn of the chain as seen from x0.
double chain_turn(const Builder& b, const std::vector<int>& chain, bool closed) {
  auto ang = [&](int v) {
    const Vector2 d = b.nodes[v] - b.x0;
    return std::atan2(d.y(), d.x());
  };
  double turn = 0.0;
  for (size_t k = 1; k < chain.size(); ++k) turn += wrap_angle(ang(chain[k]) - ang(chain[k - 1]));
  if (closed) turn += wrap_angle(ang(chain.front()) - ang(chain.back()));
  return turn;
}

// Merge two concentric chains into ring triangles. The advance rule prefers
// the better-shaped of the two candidate triangles (the staircase chain can
// graze the inner ring, where the pure arc-length rule creates needles) but
// never lets the chain parameters run apart.
void zip_chains(Builder& b, const std::vector<int>& outer, const std::vector<int>& inner,
                bool closed) {
  const auto to = chain_params(b, outer, closed);
  const auto ti = chain_params(b, inner, closed);
  const int no = static_cast<int>(outer.size()) - (closed ? 0 : 1);
  const int ni = static_cast<int>(inner.size()) - (closed ? 0 : 1);
  auto ov = [&](int k) { return outer[k % outer.size()]; };
  auto iv = [&](int k) { return inner[k % inner.size()]; };
  int i = 0, j = 0;
  while (i < no || j < ni) {
    const bool advance_outer = j >= ni || (i < no && to[i + 1] <= ti[j + 1]);
    if (advance_outer) {
      b.add_triangle(ov(i), ov(i + 1), iv(j));
      ++i;
    } else {
      b.add_triangle(iv(j), ov(i), iv(j + 1));
      ++j;
    }
  }
}

void build_ring_plain(Builder& b) {
  const RingChains rings = make_rings_plain(b);
  std::vector<int> inner = rings.outer_chain();
  const bool ring_closed = rings.closed;
  bool chain_closed = false;
  std::vector<int> chain = extract_hole_chain(b, chain_closed);
  if (chain_closed != ring_closed)
    throw std::runtime_error("ring topology mismatch between circle and hole boundary");
  if (chain_turn(b, chain, chain_closed) < 0.0) std::reverse(chain.begin(), chain.end());

  auto ang = [&](int v) {
    const Vector2 d = b.nodes[v] - b.x0;
    return std::atan2(d.y(), d.x());
  };
  if (ring_closed) {
    // Rotate the ring so both chains start at about the same angle.
    const double a0 = ang(chain.front());
    size_t best = 0;
    double best_gap = 1e30;
    for (size_t k = 0; k < inner.size(); ++k) {
      const double gap = std::abs(wrap_angle(ang(inner[k]) - a0));
      if (gap < best_gap) {
        best_gap = gap;
        best = k;
      }
    }
    std::rotate(inner.begin(), inner.begin() + best, inner.end());
  } else {
    const double d_same = std::abs(wrap_angle(ang(chain.front()) - ang(inner.front())));
    const double d_swap = std::abs(wrap_angle(ang(chain.front()) - ang(inner.back())));
    if (d_swap < d_same) std::reverse(inner.begin(), inner.end());
  }
  zip_chains(b, chain, inner, ring_closed);
}

// Local Delaunay (Lawson) flips over the ring zone. The zipper can leave
// slivers where the culling staircase runs radially; flipping toward the
// empty-circumcircle criterion with a small margin removes them. For
// symmetric builds, flips are decided on the upper half only and applied to
// the mirrored edge in the same step, which keeps the triangulation exactly
// mirror-symmetric.
void flip_ring_zone(Builder& b) {
  const double zone_r = b.radius + 5.0 * b.spacing;
  auto in_zone = [&](const std::array<int, 3>& t) {
    for (int v : t)
      if ((b.nodes[v] - b.x0).norm() < zone_r) return true;
    return false;
  };

  auto ekey = [](int u, int v) {
    return (int64_t(std::min(u, v)) << 32) | uint32_t(std::max(u, v));
  };
  std::unordered_map<int64_t, std::array<int, 2>> edge_tris;
  for (int t = 0; t < static_cast<int>(b.tris.size()); ++t) {
    if (!in_zone(b.tris[t])) continue;
    for (int e = 0; e < 3; ++e) {
      auto [it, inserted] =
          edge_tris.try_emplace(ekey(b.tris[t][e], b.tris[t][(e + 1) % 3]),
                                std::array<int, 2>{-1, -1});
      (it->second[0] < 0 ? it->second[0] : it->second[1]) = t;
    }
  }

  auto apex = [&](int t, int a, int c) {
    for (int v : b.tris[t])
      if (v != a && v != c) return v;
    return -1;
  };
  // Positive when d lies strictly inside the circumcircle of the
  // counterclockwise triangle (a, b, c); coordinates scaled by the spacing.
  auto incircle = [&](int ia, int ib, int ic, int id) {
    const Point2 pd = b.nodes[id];
    auto row = [&](int iv, double* r) {
      const Vector2 q = (b.nodes[iv] - pd) / b.spacing;
      r[0] = q.x();
      r[1] = q.y();
      r[2] = q.squaredNorm();
    };
    double ra[3], rb[3], rc[3];
    row(ia, ra);
    row(ib, rb);
    row(ic, rc);
    double det = ra[0] * (rb[1] * rc[2] - rb[2] * rc[1]) -
                 ra[1] * (rb[0] * rc[2] - rb[2] * rc[0]) +
                 ra[2] * (rb[0] * rc[1] - rb[1] * rc[0]);
    if (signed_area(b.nodes[ia], b.nodes[ib], b.nodes[ic]) < 0.0) det = -det;
    return det;
  };

  std::vector<int64_t> queue;
  for (const auto& [k, ts] : edge_tris)
    if (ts[1] >= 0) queue.push_back(k);
  std::sort(queue.begin(), queue.end());

  auto replace_edge_tri = [&](int u, int v, int told, int tnew) {
    auto it = edge_tris.find(ekey(u, v));
    if (it == edge_tris.end()) return;
    if (it->second[0] == told)
      it->second[0] = tnew;
    else if (it->second[1] == told)
      it->second[1] = tnew;
  };

  auto try_flip = [&](int64_t key, bool force, int64_t* new_diag = nullptr) -> bool {
    auto it = edge_tris.find(key);
    if (it == edge_tris.end() || it->second[0] < 0 || it->second[1] < 0) return false;
    const int a = int(key >> 32), c = int(uint32_t(key));
    const int t1 = it->second[0], t2 = it->second[1];
    const int p1 = apex(t1, a, c), p2 = apex(t2, a, c);
    if (p1 < 0 || p2 < 0 || p1 == p2) return false;
    // The new diagonal must not duplicate an existing edge elsewhere.
    if (edge_tris.count(ekey(p1, p2))) return false;
    if (!force && incircle(a, c, p1, p2) <= 1e-9) return false;
    // The flip is valid only for a strictly convex quad: a and c on opposite
    // sides of the new diagonal.
    const double s_a = signed_area(b.nodes[p1], b.nodes[p2], b.nodes[a]);
    const double s_c = signed_area(b.nodes[p1], b.nodes[p2], b.nodes[c]);
    if (!(s_a * s_c < 0.0)) return false;
    if (std::abs(s_a) <= 1e-18 || std::abs(s_c) <= 1e-18) return false;

    b.tris[t1] = s_a > 0.0 ? std::array<int, 3>{p1, p2, a} : std::array<int, 3>{p2, p1, a};
    b.tris[t2] = s_c > 0.0 ? std::array<int, 3>{p1, p2, c} : std::array<int, 3>{p2, p1, c};
    edge_tris.erase(it);
    edge_tris[ekey(p1, p2)] = {t1, t2};
    replace_edge_tri(a, p2, t2, t1);
    replace_edge_tri(c, p1, t1, t2);
    for (int u : {a, c})
      for (int v : {p1, p2}) queue.push_back(ekey(u, v));
    if (new_diag) *new_diag = ekey(p1, p2);
    return true;
  };

  auto upper_or_axis = [&](int64_t key) {
    if (!b.symmetric) return true;
    const int u = int(key >> 32), v = int(uint32_t(key));
    return b.nodes[u].y() + b.nodes[v].y() >= 1.0 - 1e-12;
  };
  auto mirror_key = [&](int64_t key) {
    const int u = int(key >> 32), v = int(uint32_t(key));
    return ekey(b.mirror[u], b.mirror[v]);
  };

  size_t head = 0;
  const size_t cap = 500 * std::max<size_t>(64, queue.size());
  while (head < queue.size() && queue.size() < cap) {
    const int64_t key = queue[head++];
    if (!upper_or_axis(key)) continue;
    int64_t diag = 0;
    if (try_flip(key, false, &diag) && b.symmetric) {
      // Apply the mirrored flip unconditionally so a marginal criterion can
      // never resolve differently on the two halves; if the mirror cannot
      // flip, revert the primary to keep the halves identical.
      const int64_t mk = mirror_key(key);
      if (mk != key && !try_flip(mk, true)) try_flip(diag, true);
    }
  }

  // Near-collinear needles make the incircle sign pure noise, so the margin
  // criterion can stall on them. Finish with flips that directly improve the
  // worst altitude of the edge's triangle pair.
  auto altitude = [&](int ia, int ib, int ic) {
    const Point2 &pa = b.nodes[ia], &pb = b.nodes[ib], &pc = b.nodes[ic];
    const double area = std::abs(signed_area(pa, pb, pc));
    const double diam = std::max({(pa - pb).norm(), (pb - pc).norm(), (pc - pa).norm()});
    return 2.0 * area / diam;
  };
  for (int round = 0; round < 8; ++round) {
    std::vector<int64_t> keys;
    for (const auto& [k, ts] : edge_tris)
      if (ts[0] >= 0 && ts[1] >= 0) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    bool changed = false;
    for (const int64_t key : keys) {
      if (!upper_or_axis(key)) continue;
      auto it = edge_tris.find(key);
      if (it == edge_tris.end() || it->second[0] < 0 || it->second[1] < 0) continue;
      const int a = int(key >> 32), c = int(uint32_t(key));
      const int t1 = it->second[0], t2 = it->second[1];
      const int p1 = apex(t1, a, c), p2 = apex(t2, a, c);
      if (p1 < 0 || p2 < 0 || p1 == p2) continue;
      const double before = std::min(altitude(a, c, p1), altitude(a, c, p2));
      if (before > 0.45 * b.spacing) continue;
      const double after = std::min(altitude(p1, p2, a), altitude(p1, p2, c));
      if (after <= 1.5 * before) continue;
      int64_t diag = 0;
      if (try_flip(key, true, &diag)) {
        changed = true;
        if (b.symmetric) {
          const int64_t mk = mirror_key(key);
          if (mk != key && !try_flip(mk, true)) try_flip(diag, true);
        }
      }
    }
    if (!changed) break;
  }
}

// Local position optimization of the grid vertices adjacent to the circle
// ring: each vertex takes the candidate position with the best worst incident
// triangle (largest minimum altitude, long edges penalized). Circle and box
// nodes stay pinned; for symmetric builds the upper half drives and the lower
// half mirrors, axis vertices move along the axis only.
void smooth_ring_vertices(Builder& b) {
  auto on_box_edge = [&](int v) {
    const Point2& p = b.nodes[v];
    return p.x() == 0.0 || p.x() == 1.0 || p.y() == 0.0 || p.y() == 1.0;
  };
  std::unordered_map<int, std::vector<int>> incident;  // movable vertex -> triangle ids
  const double reach = b.radius + 3.2 * b.spacing;
  for (int t = 0; t < static_cast<int>(b.tris.size()); ++t) {
    const auto& tri = b.tris[t];
    bool in_ring_zone = false;
    for (int v : tri)
      in_ring_zone =
          in_ring_zone || b.is_circle[v] || (b.nodes[v] - b.x0).norm() < reach;
    if (!in_ring_zone) continue;
    for (int v : tri)
      if (!b.is_circle[v] && !on_box_edge(v)) incident[v];  // mark movable
  }
  if (incident.empty()) return;
  for (int t = 0; t < static_cast<int>(b.tris.size()); ++t)
    for (int v : b.tris[t]) {
      auto it = incident.find(v);
      if (it != incident.end()) it->second.push_back(t);
    }

  // Sum of smooth per-triangle barriers (small altitudes and long edges are
  // both expensive). A vertex move changes only its incident terms, so
  // accepting only strict decreases of the local sum strictly decreases the
  // global sum: the sweep cannot cycle.
  auto local_score = [&](int v, const Point2& pos) {
    const Point2 saved = b.nodes[v];
    b.nodes[v] = pos;
    double total = 0.0;
    bool valid = true;
    for (int t : incident.at(v)) {
      const auto& tri = b.tris[t];
      const double area = signed_area(b.nodes[tri[0]], b.nodes[tri[1]], b.nodes[tri[2]]);
      if (area <= 1e-18) {
        valid = false;
        break;
      }
      double diam = 0.0;
      for (int e = 0; e < 3; ++e)
        diam = std::max(diam, (b.nodes[tri[e]] - b.nodes[tri[(e + 1) % 3]]).norm());
      const double alt = 2.0 * area / diam;
      const double a = b.spacing / (alt + 0.01 * b.spacing);
      const double d = diam / (1.36 * b.spacing);
      const double d4 = d * d * d * d;
      total += a * a + d4 * d4;
    }
    b.nodes[v] = saved;
    if (!valid) return 1e300;
    return total;
  };

  std::vector<int> order;
  for (const auto& [v, ts] : incident) order.push_back(v);
  std::sort(order.begin(), order.end());

  const double radial_floor = b.radius + 0.8 * b.spacing;
  for (int v : order) {
    if (b.symmetric && b.nodes[v].y() < 0.5) continue;  // the mirror drives it
    const bool on_axis = b.symmetric && b.nodes[v].y() == 0.5;

    Point2 centroid = Point2::Zero();
    std::vector<int> ns;
    for (int t : incident.at(v))
      for (int w : b.tris[t])
        if (w != v) ns.push_back(w);
    std::sort(ns.begin(), ns.end());
    ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
    for (int w : ns) centroid += b.nodes[w];
    centroid /= double(ns.size());

    std::vector<Point2> candidates{b.nodes[v], 0.5 * (b.nodes[v] + centroid), centroid};
    {
      Vector2 rel = 0.5 * (b.nodes[v] + centroid) - b.x0;
      if (rel.norm() > 1e-12 && rel.norm() < radial_floor)
        candidates.push_back(b.x0 + radial_floor * rel / rel.norm());
      rel = b.nodes[v] - b.x0;
      if (rel.norm() > 1e-12)
        candidates.push_back(b.x0 + (b.radius + 0.95 * b.spacing) * rel / rel.norm());
    }
    // Pattern-search offsets to escape poor local equilibria.
    for (const double step : {0.45, 0.25, 0.1, 0.04})
      for (int dir = 0; dir < 12; ++dir) {
        const double a = dir * M_PI / 6.0;
        candidates.push_back(b.nodes[v] +
                             step * b.spacing * Vector2(std::cos(a), std::sin(a)));
      }
    if (on_axis)
      for (Point2& c : candidates) c.y() = 0.5;

    int best = 0;
    double best_score = local_score(v, candidates[0]);
    for (size_t k = 1; k < candidates.size(); ++k) {
      const double s = local_score(v, candidates[k]);
      if (s < best_score * (1.0 - 1e-12)) {
        best_score = s;
        best = static_cast<int>(k);
      }
    }
    if (best_score >= 1e299) continue;
    b.nodes[v] = candidates[best];
    if (b.symmetric && !on_axis) {
      const int m = b.mirror[v];
      if (m != v) b.nodes[m] = Point2(candidates[best].x(), 1.0 - candidates[best].y());
    }
  }
}

// Final repair sweep: the union-jack grid pins the global quality window
// (diameters up to sqrt(2) g, altitudes down to g/sqrt(2)), so ring triangles
// must keep altitudes above ~0.58 g and diameters below ~1.42 g. Vertices of
// violating triangles take the candidate position minimizing the total
// violation of their incident triangles.
void repair_ring_vertices(Builder& b) {
  auto on_box_edge = [&](int v) {
    const Point2& p = b.nodes[v];
    return p.x() == 0.0 || p.x() == 1.0 || p.y() == 0.0 || p.y() == 1.0;
  };
  double alt_floor = 0.585 * b.spacing;
  const double diam_cap = 1.412 * b.spacing;

  std::unordered_map<int, std::vector<int>> incident;
  const double near_r = b.radius + 3.8 * b.spacing;
  for (int t = 0; t < static_cast<int>(b.tris.size()); ++t) {
    const auto& tri = b.tris[t];
    bool near = false;
    for (int v : tri)
      near = near || b.is_circle[v] || (b.nodes[v] - b.x0).norm() < near_r;
    if (!near) continue;
    for (int v : tri)
      if (!b.is_circle[v] && !on_box_edge(v)) incident[v];
  }
  for (int t = 0; t < static_cast<int>(b.tris.size()); ++t)
    for (int v : b.tris[t]) {
      auto it = incident.find(v);
      if (it != incident.end()) it->second.push_back(t);
    }

  auto violation = [&](int v) {
    double total = 0.0;
    for (int t : incident.at(v)) {
      const auto& tri = b.tris[t];
      const double area = signed_area(b.nodes[tri[0]], b.nodes[tri[1]], b.nodes[tri[2]]);
      if (area <= 1e-18) return 1e300;
      double diam = 0.0;
      for (int e = 0; e < 3; ++e)
        diam = std::max(diam, (b.nodes[tri[e]] - b.nodes[tri[(e + 1) % 3]]).norm());
      total += std::max(0.0, alt_floor - 2.0 * area / diam);
      total += std::max(0.0, diam - diam_cap);
    }
    return total;
  };

  std::vector<int> order;
  for (const auto& [v, ts] : incident) order.push_back(v);
  std::sort(order.begin(), order.end());

  const double final_floor = alt_floor;
  for (const double stage : {1.0}) {
    alt_floor = std::min(stage * b.spacing, final_floor);
    for (int round = 0; round < 40; ++round) {
      bool any_violation = false;
      bool improved = false;
      for (int v : order) {
        if (b.symmetric && b.nodes[v].y() < 0.5) continue;
        const bool on_axis = b.symmetric && b.nodes[v].y() == 0.5;
        double cur = violation(v);
        if (cur <= 0.0) continue;
        any_violation = true;
        const Point2 saved = b.nodes[v];
        Point2 best = saved;
        double best_v = cur;
        for (const double step : {0.4, 0.2, 0.1, 0.05, 0.02})
          for (int dir = 0; dir < 16; ++dir) {
            const double a = dir * M_PI / 8.0;
            Point2 cand = saved + step * b.spacing * Vector2(std::cos(a), std::sin(a));
            if (on_axis) cand.y() = 0.5;
            b.nodes[v] = cand;
            const double val = violation(v);
            if (val < best_v - 1e-18) {
              best_v = val;
              best = cand;
            }
          }
        b.nodes[v] = best;
        if (best_v < cur) improved = true;
        if (b.symmetric && !on_axis) {
          const int m = b.mirror[v];
          if (m != v) b.nodes[m] = Point2(best.x(), 1.0 - best.y());
        }
      }
      if (!any_violation) break;
      flip_ring_zone(b);
      if (!improved && round > 2) break;
    }
  }
}

void build_ring_symmetric(Builder& b) {
  const RingChains rings = make_rings_symmetric(b);
  const std::vector<int>& inner_upper = rings.outer_chain();
  const bool ring_closed = rings.closed;
  bool chain_closed = false;
  std::vector<int> chain = extract_hole_chain(b, chain_closed);
  if (chain_closed != ring_closed)
    throw std::runtime_error("ring topology mismatch between circle and hole boundary");
  if (chain_turn(b, chain, chain_closed) < 0.0) std::reverse(chain.begin(), chain.end());

  auto on_axis = [&](int v) { return b.nodes[v].y() == 0.5; };
  auto right_anchor = [&](int v) { return on_axis(v) && b.nodes[v].x() > b.x0.x(); };

  // Slice the chain into its upper half, from the axis vertex right of the
  // ball up to either the left axis vertex (interior ball) or the upper box
  // terminal (clipped ball).
  std::vector<int> upper_chain;
  size_t start = chain.size();
  for (size_t k = 0; k < chain.size(); ++k)
    if (right_anchor(chain[k])) start = k;
  if (start == chain.size())
    throw std::runtime_error("symmetric ring: missing right axis anchor");
  if (chain_closed) {
    std::rotate(chain.begin(), chain.begin() + start, chain.end());
    upper_chain.push_back(chain.front());
    for (size_t k = 1; k < chain.size(); ++k) {
      upper_chain.push_back(chain[k]);
      if (on_axis(chain[k])) break;
    }
  } else {
    upper_chain.assign(chain.begin() + start, chain.end());
  }
  if (upper_chain.size() < 2 || b.nodes[upper_chain.back()].y() < 0.5)
    throw std::runtime_error("symmetric ring: hole chain does not close above the axis");

  const size_t before = b.tris.size();
  zip_chains(b, upper_chain, inner_upper, false);
  const size_t after = b.tris.size();
  for (size_t t = before; t < after; ++t) {
    const auto tri = b.tris[t];
    b.add_triangle(b.mirror[tri[0]], b.mirror[tri[2]], b.mirror[tri[1]]);
  }
}

void build_adjacency(TriMesh& mesh) {
  const int nn = mesh.num_nodes();
  std::vector<int> deg(nn, 0);
  for (const auto& t : mesh.triangles)
    for (int v : t) deg[v]++;
  mesh.patch_offsets.assign(nn + 1, 0);
  for (int v = 0; v < nn; ++v) mesh.patch_offsets[v + 1] = mesh.patch_offsets[v] + deg[v];
  mesh.patch_triangles.assign(mesh.patch_offsets.back(), -1);
  mesh.far_offsets = mesh.patch_offsets;
  mesh.far_edges.assign(mesh.patch_offsets.back(), {-1, -1});
  std::vector<int> fill(nn, 0);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int e = 0; e < 3; ++e) {
      const int v = tri[e];
      const int slot = mesh.patch_offsets[v] + fill[v]++;
      mesh.patch_triangles[slot] = t;
      mesh.far_edges[slot] = {tri[(e + 1) % 3], tri[(e + 2) % 3]};
    }
  }
  mesh.neighbor_offsets.assign(nn + 1, 0);
  std::vector<int> scratch;
  std::vector<int> all;
  for (int v = 0; v < nn; ++v) {
    scratch.clear();
    for (int s = mesh.far_offsets[v]; s < mesh.far_offsets[v + 1]; ++s) {
      scratch.push_back(mesh.far_edges[s][0]);
      scratch.push_back(mesh.far_edges[s][1]);
    }
    std::sort(scratch.begin(), scratch.end());
    scratch.erase(std::unique(scratch.begin(), scratch.end()), scratch.end());
    all.insert(all.end(), scratch.begin(), scratch.end());
    mesh.neighbor_offsets[v + 1] = static_cast<int>(all.size());
  }
  mesh.neighbors = std::move(all);
}

void check_conforming(const TriMesh& mesh) {
  std::unordered_map<int64_t, int> count;
  auto key = [](int u, int v) {
    return (int64_t(std::min(u, v)) << 32) | uint32_t(std::max(u, v));
  };
  for (const auto& t : mesh.triangles)
    for (int e = 0; e < 3; ++e) count[key(t[e], t[(e + 1) % 3])]++;
  for (const auto& [k, c] : count) {
    (void)k;
    if (c > 2)
      throw std::runtime_error("non-conforming mesh: edge shared by more than two triangles");
  }
}

void compute_metrics(TriMesh& mesh) {
  mesh.h = 0.0;
  mesh.h_perp = 1e300;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    mesh.h = std::max(mesh.h, mesh.triangle_diameter(t));
    mesh.h_perp = std::min(mesh.h_perp, mesh.triangle_altitude(t));
  }
  mesh.aspect = mesh.h / mesh.h_perp;
}

void build_locator(TriMesh& mesh) {
  const int cells =
      std::max(8, int(std::floor(std::sqrt(double(std::max(1, mesh.num_triangles()))))));
  mesh.locator_cells = cells;
  std::vector<std::pair<int, int>> entries;  // (cell, triangle)
  auto cell_of = [&](double v) { return std::clamp(int(v * cells), 0, cells - 1); };
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    double lox = 1e300, hix = -1e300, loy = 1e300, hiy = -1e300;
    for (int v : tri) {
      lox = std::min(lox, mesh.nodes[v].x());
      hix = std::max(hix, mesh.nodes[v].x());
      loy = std::min(loy, mesh.nodes[v].y());
      hiy = std::max(hiy, mesh.nodes[v].y());
    }
    for (int cy = cell_of(loy); cy <= cell_of(hiy); ++cy)
      for (int cx = cell_of(lox); cx <= cell_of(hix); ++cx)
        entries.emplace_back(cy * cells + cx, t);
  }
  std::sort(entries.begin(), entries.end());
  mesh.locator_offsets.assign(size_t(cells) * cells + 1, 0);
  mesh.locator_triangles.resize(entries.size());
  for (size_t k = 0; k < entries.size(); ++k) {
    mesh.locator_offsets[entries[k].first + 1]++;
    mesh.locator_triangles[k] = entries[k].second;
  }
  for (size_t c = 1; c < mesh.locator_offsets.size(); ++c)
    mesh.locator_offsets[c] += mesh.locator_offsets[c - 1];
}

TriMesh finalize(Builder& b) {
  TriMesh mesh;
  mesh.node_class.resize(b.nodes.size());
  const double eps = 1e-12;
  for (size_t v = 0; v < b.nodes.size(); ++v) {
    if (b.is_circle[v]) {
      mesh.node_class[v] = NodeClass::OriginBoundary;
      continue;
    }
    const Point2& p = b.nodes[v];
    const bool outer =
        p.x() < eps || p.x() > 1.0 - eps || p.y() < eps || p.y() > 1.0 - eps;
    mesh.node_class[v] = outer ? NodeClass::OuterBoundary : NodeClass::Interior;
  }
  mesh.nodes = std::move(b.nodes);
  mesh.triangles = std::move(b.tris);
  mesh.origin = b.x0;
  mesh.ball_radius = b.radius;
  mesh.grid_n = b.n;
  if (b.symmetric) mesh.mirror_nodes = std::move(b.mirror);
  for (int t = 0; t < mesh.num_triangles(); ++t)
    if (!(mesh.triangle_area(t) > 0.0))
      throw std::runtime_error("degenerate triangle in the final mesh");
  check_conforming(mesh);
  build_adjacency(mesh);
  compute_metrics(mesh);
  build_locator(mesh);
  return mesh;
}

}  // namespace

double TriMesh::triangle_area(int t) const {
  const auto& tri = triangles[t];
  return signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
}

double TriMesh::triangle_diameter(int t) const {
  const auto& tri = triangles[t];
  double d = 0.0;
  for (int e = 0; e < 3; ++e)
    d = std::max(d, (nodes[tri[e]] - nodes[tri[(e + 1) % 3]]).norm());
  return d;
}

double TriMesh::triangle_altitude(int t) const {
  return 2.0 * triangle_area(t) / triangle_diameter(t);
}

Point2 TriMesh::triangle_centroid(int t) const {
  const auto& tri = triangles[t];
  return (nodes[tri[0]] + nodes[tri[1]] + nodes[tri[2]]) / 3.0;
}

Eigen::Vector3d TriMesh::barycentric(int t, const Point2& x) const {
  const auto& tri = triangles[t];
  const Point2 &a = nodes[tri[0]], &b = nodes[tri[1]], &c = nodes[tri[2]];
  const double area = signed_area(a, b, c);
  Eigen::Vector3d l;
  l[0] = signed_area(x, b, c) / area;
  l[1] = signed_area(a, x, c) / area;
  l[2] = signed_area(a, b, x) / area;
  return l;
}

int TriMesh::locate(const Point2& x) const {
  if (locator_cells == 0) return -1;
  const int cells = locator_cells;
  const int cx = std::clamp(int(x.x() * cells), 0, cells - 1);
  const int cy = std::clamp(int(x.y() * cells), 0, cells - 1);
  const double tol = -1e-11;
  for (int ring = 0; ring < 2; ++ring) {
    for (int dy = -ring; dy <= ring; ++dy) {
      for (int dx = -ring; dx <= ring; ++dx) {
        if (std::max(std::abs(dx), std::abs(dy)) != ring) continue;
        const int gx = cx + dx, gy = cy + dy;
        if (gx < 0 || gy < 0 || gx >= cells || gy >= cells) continue;
        const int c = gy * cells + gx;
        for (int s = locator_offsets[c]; s < locator_offsets[c + 1]; ++s) {
          const int t = locator_triangles[s];
          if (barycentric(t, x).minCoeff() >= tol) return t;
        }
      }
    }
  }
  return -1;
}

TriMesh build_mesh(int n, const Point2& x0, double ball_radius) {
  if (n < 11) throw std::invalid_argument("grid resolution must be at least 11");
  if (!(ball_radius > 2.0 / (n - 1)))
    throw std::invalid_argument("origin ball is not resolvable at this grid spacing");
  Builder b;
  b.n = n;
  b.spacing = 1.0 / (n - 1);
  b.x0 = x0;
  b.radius = ball_radius;
  b.symmetric = (x0.y() == 0.5) && (n % 2 == 1);

  // The aligned relief layer needs matching in-box arcs for both radii: that
  // holds for an interior ball and for a center sitting exactly on a box
  // edge. Other clippings fall back to zipping the circle directly.
  const double buffer_radius = ball_radius + 0.9 * b.spacing;
  {
    bool full = false;
    const auto arcs = in_box_arcs(x0, buffer_radius, full);
    const bool on_edge =
        x0.x() == 0.0 || x0.x() == 1.0 || x0.y() == 0.0 || x0.y() == 1.0;
    if (full || (on_edge && arcs.size() == 1)) b.buffer_radius = buffer_radius;
  }

  make_grid_coordinates(b);
  const double outer_ring = b.buffer_radius > 0.0 ? b.buffer_radius : ball_radius;
  make_grid_nodes(b, outer_ring + kCullFactor * b.spacing);
  make_grid_triangles(b);
  b.first_ring_node = static_cast<int>(b.nodes.size());
  if (b.symmetric)
    build_ring_symmetric(b);
  else
    build_ring_plain(b);
  flip_ring_zone(b);
  for (int pass = 0; pass < 8; ++pass) {
    smooth_ring_vertices(b);
    flip_ring_zone(b);
  }
  repair_ring_vertices(b);
  return finalize(b);
}

TriMesh build_grid_mesh(int n) {
  if (n < 2) throw std::invalid_argument("grid resolution must be at least 2");
  Builder b;
  b.n = n;
  b.spacing = 1.0 / (n - 1);
  b.symmetric = false;
  make_grid_coordinates(b);
  make_grid_nodes(b, 0.0);
  make_grid_triangles(b);
  return finalize(b);
}

std::vector<PatchSegment> patch_boundary(const TriMesh& mesh, int node) {
  const int lo = mesh.far_offsets[node], hi = mesh.far_offsets[node + 1];
  if (lo == hi) throw std::runtime_error("node has an empty patch");
  std::vector<std::array<int, 2>> segs(mesh.far_edges.begin() + lo, mesh.far_edges.begin() + hi);
  std::map<int, std::vector<int>> by_end;
  for (size_t s = 0; s < segs.size(); ++s) {
    by_end[segs[s][0]].push_back(static_cast<int>(s));
    by_end[segs[s][1]].push_back(static_cast<int>(s));
  }
  int start_vertex = segs[0][0];
  for (const auto& [v, ss] : by_end)
    if (ss.size() == 1) {
      start_vertex = v;
      break;
    }
  std::vector<PatchSegment> chain;
  std::vector<bool> used(segs.size(), false);
  int v = start_vertex;
  for (size_t k = 0; k < segs.size(); ++k) {
    int pick = -1;
    for (int s : by_end[v])
      if (!used[s]) {
        pick = s;
        break;
      }
    if (pick < 0) break;
    used[pick] = true;
    const int w = (segs[pick][0] == v) ? segs[pick][1] : segs[pick][0];
    chain.push_back({v, w});
    v = w;
  }
  if (chain.size() != segs.size())
    throw std::runtime_error("patch far edges do not form a single chain");
  return chain;
}

std::vector<int> origin_boundary_nodes(const TriMesh& mesh) {
  std::vector<int> out;
  for (int v = 0; v < mesh.num_nodes(); ++v)
    if (mesh.node_class[v] == NodeClass::OriginBoundary) out.push_back(v);
  return out;
}

}  // namespace zermelo
