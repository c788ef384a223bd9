#include "zermelo/error_analysis.hpp"

#include <algorithm>
#include <cmath>

#include "zermelo/characteristics.hpp"

namespace zermelo {

namespace {

// Spectral norm of a symmetric 2x2 matrix.
double sym_norm(double a, double b, double c) {
  const double mean = 0.5 * (a + c);
  const double rad = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
  return std::max(std::abs(mean + rad), std::abs(mean - rad));
}

}  // namespace

double hessian_sup_estimate(const ValueField& values, const TriMesh& mesh,
                            const std::vector<char>& masked_tris, int* skipped) {
  const int nn = mesh.num_nodes();
  std::vector<char> node_masked(nn, 0);
  if (!masked_tris.empty()) {
    for (int t = 0; t < mesh.num_triangles(); ++t)
      if (masked_tris[t])
        for (int v : mesh.triangles[t]) node_masked[v] = 1;
  }

  int skip_count = 0;
  double sup = 0.0;
  std::vector<int> ring;
  std::vector<char> in_ring(nn, 0);
  for (int v = 0; v < nn; ++v) {
    if (mesh.node_class[v] != NodeClass::Interior || node_masked[v]) continue;

    // Two-ring neighborhood.
    ring.clear();
    auto push = [&](int w) {
      if (!in_ring[w]) {
        in_ring[w] = 1;
        ring.push_back(w);
      }
    };
    push(v);
    for (int s = mesh.neighbor_offsets[v]; s < mesh.neighbor_offsets[v + 1]; ++s) {
      const int w = mesh.neighbors[s];
      push(w);
      for (int r = mesh.neighbor_offsets[w]; r < mesh.neighbor_offsets[w + 1]; ++r)
        push(mesh.neighbors[r]);
    }
    const int k = static_cast<int>(ring.size());
    for (int w : ring) in_ring[w] = 0;
    if (k < 8) {
      ++skip_count;
      continue;
    }

    // Quadratic least squares in coordinates scaled by the local patch size.
    const Point2 center = mesh.nodes[v];
    double scale = 0.0;
    for (int w : ring) scale = std::max(scale, (mesh.nodes[w] - center).norm());
    Eigen::MatrixXd A(k, 6);
    Eigen::VectorXd rhs(k);
    for (int i = 0; i < k; ++i) {
      const Vector2 d = (mesh.nodes[ring[i]] - center) / scale;
      A.row(i) << 1.0, d.x(), d.y(), d.x() * d.x(), d.x() * d.y(), d.y() * d.y();
      rhs(i) = values.values[ring[i]];
    }
    const Eigen::VectorXd coef = (A.transpose() * A).ldlt().solve(A.transpose() * rhs);
    const double s2 = scale * scale;
    sup = std::max(sup, sym_norm(2.0 * coef(3) / s2, coef(4) / s2, 2.0 * coef(5) / s2));
  }
  if (skipped) *skipped = skip_count;
  return sup;
}

double apriori_bound(double h, double aspect, double hessian_sup, double c0, double c1,
                     double airspeed, double max_value) {
  if (!(c0 < airspeed) || c0 < 0.0 || c1 < 0.0 || h <= 0.0 || aspect < 1.0 ||
      hessian_sup < 0.0 || max_value < 0.0)
    throw std::invalid_argument("invalid inputs to the error bound");
  const double gap = airspeed - c0;
  const double wind_term = 2.0 * c1 * std::sqrt(airspeed) * (airspeed + c0) * (airspeed + c0) /
                           std::pow(gap, 4.5);
  return h * aspect * (hessian_sup + wind_term) * (airspeed + c0) * max_value +
         7.0 * h / gap;
}

AposterioriResult aposteriori_error(const ValueField& values, const ValueField& reference,
                                    const TriMesh& mesh, const TriMesh& reference_mesh,
                                    const std::vector<char>& masked_tris) {
  const bool identical = reference_mesh.grid_n == mesh.grid_n;
  if (!identical && reference_mesh.grid_n - 1 < 2 * (mesh.grid_n - 1))
    throw std::invalid_argument("reference grid must be at least twice as fine");
  std::vector<char> node_masked(mesh.num_nodes(), 0);
  if (!masked_tris.empty())
    for (int t = 0; t < mesh.num_triangles(); ++t)
      if (masked_tris[t])
        for (int v : mesh.triangles[t]) node_masked[v] = 1;

  AposterioriResult out;
  for (int v = 0; v < mesh.num_nodes(); ++v) {
    const double ref = eval_value(reference, reference_mesh, mesh.nodes[v]);
    const double diff = std::abs(values.values[v] - ref);
    out.unmasked = std::max(out.unmasked, diff);
    if (!node_masked[v]) out.masked = std::max(out.masked, diff);
  }
  return out;
}

double reference_inflation(double h_coarse, double h_reference) {
  if (!(h_reference < h_coarse)) throw std::invalid_argument("reference must be finer");
  return 1.0 / (1.0 - h_reference / h_coarse);
}

RunArtifacts run_restricted_solve(const WindField& field, double airspeed, const Point2& x0,
                                  double ball_radius, int n, double tol, SweepScheme scheme,
                                  double angle_threshold_deg, double kink_threshold_deg) {
  RunArtifacts run;
  run.n = n;
  run.mesh = build_mesh(n, x0, ball_radius);
  run.oracle = boundary_oracle_g(run.mesh, field, airspeed, x0, ball_radius);
  run.values = solve(run.mesh, field, airspeed, run.oracle, tol, scheme);
  run.flagged = detect_singular_simplices(run.values, run.mesh, angle_threshold_deg);
  // Every crease matters for the regular-region mask: no chain-depth filter.
  run.kink_flags = detect_singular_simplices(run.values, run.mesh, kink_threshold_deg,
                                             std::numeric_limits<double>::infinity());
  std::vector<char> mask(run.mesh.num_triangles(), 0);
  for (int t : run.kink_flags) mask[t] = 1;
  for (int t : run.flagged) mask[t] = 1;
  // Nearly-conjugate exclusion: weak caustics focus the characteristics
  // before any angle detector can see them, so sweep for sign changes of the
  // conjugacy determinant and mask the focusing tails.
  {
    const double horizon = std::min(3.0 / (airspeed - bounds(field).speed), 4.0);
    const int angles = std::min<int>(160, 2 * static_cast<int>(run.oracle.node_ids.size()));
    const std::vector<ConjugateTail> tails =
        conjugate_scan(run.oracle, field, airspeed, angles, horizon, 0.15, horizon / 1024.0);
    for (const ConjugateTail& ct : tails)
      for (const Point2& p : ct.points) {
        const int t = run.mesh.locate(p);
        if (t >= 0) mask[t] = 1;
      }
  }
  run.premask = dilate_mask(run.mesh, mask, 2);
  return run;
}

ResolutionReport analyze_against_reference(const RunArtifacts& run, const RunArtifacts& ref,
                                           const WindBounds& wind_bounds, double airspeed,
                                           double mask_tau) {
  ResolutionReport rep;
  rep.n = run.n;
  rep.h = run.mesh.h;
  rep.aspect = run.mesh.aspect;
  rep.flagged_count = static_cast<int>(run.flagged.size());

  // Preliminary error level from the crease neighborhood, then the bands.
  const AposterioriResult prelim =
      aposteriori_error(run.values, ref.values, run.mesh, ref.mesh, run.premask);
  const double inflation = reference_inflation(run.mesh.h, ref.mesh.h);
  rep.epsilon = prelim.masked * inflation;

  // Two regions with different jobs. The error restriction excludes the
  // singular band, which is a property of the flow, not of the grid: it is
  // seeded by the reference detection (the best available estimate of the
  // singular set) and mapped onto the run mesh, so every resolution of a
  // study is measured on the same region. A coarse detector alone misses
  // under-resolved collision zones and would skew the coarse rows upward.
  const TrustRegion ref_region =
      trust_region(ref.values, ref.mesh, ref.flagged, rep.epsilon);
  const TrustRegion run_region =
      trust_region(run.values, run.mesh, run.flagged, rep.epsilon);
  std::vector<char> error_mask = run_region.marked_tris;
  for (int t = 0; t < run.mesh.num_triangles(); ++t) {
    const int rt = ref.mesh.locate(run.mesh.triangle_centroid(t));
    if (rt >= 0 && ref_region.marked_tris[rt]) error_mask[t] = 1;
  }
  for (int t : run.flagged) error_mask[t] = 1;
  error_mask = dilate_mask(run.mesh, error_mask, 1);
  rep.masked_count = static_cast<int>(std::count(error_mask.begin(), error_mask.end(), char(1)));

  const double band = std::max(2.0 * rep.epsilon, mask_tau) / 2.0;
  const TrustRegion regular_region = trust_region(run.values, run.mesh, run.kink_flags, band);
  std::vector<char> regular_mask = regular_region.marked_tris;
  for (size_t t = 0; t < regular_mask.size(); ++t)
    regular_mask[t] = regular_mask[t] || run.premask[t];
  regular_mask = dilate_mask(run.mesh, regular_mask, 1);

  rep.hessian_sup = hessian_sup_estimate(run.values, run.mesh, regular_mask, &rep.skipped_fits);

  std::vector<char> node_masked(run.mesh.num_nodes(), 0);
  for (int t = 0; t < run.mesh.num_triangles(); ++t)
    if (regular_mask[t])
      for (int v : run.mesh.triangles[t]) node_masked[v] = 1;
  int unmasked_nodes = 0;
  for (int v = 0; v < run.mesh.num_nodes(); ++v)
    if (!node_masked[v]) {
      ++unmasked_nodes;
      rep.max_value = std::max(rep.max_value, std::abs(run.values.values[v]));
    }
  if (unmasked_nodes == 0)
    for (double v : run.values.values) rep.max_value = std::max(rep.max_value, std::abs(v));

  rep.apriori = apriori_bound(rep.h, rep.aspect, rep.hessian_sup, wind_bounds.speed,
                              wind_bounds.rate, airspeed, rep.max_value);
  const AposterioriResult final_err =
      aposteriori_error(run.values, ref.values, run.mesh, ref.mesh, error_mask);
  rep.error = final_err.masked;
  rep.error_unmasked = final_err.unmasked;
  return rep;
}

std::vector<ResolutionReport> convergence_study(const WindField& field, double airspeed,
                                                const Point2& x0, double ball_radius,
                                                const std::vector<int>& resolutions,
                                                int reference_n, double tol,
                                                SweepScheme scheme) {
  for (size_t i = 1; i < resolutions.size(); ++i)
    if (resolutions[i] <= resolutions[i - 1])
      throw std::invalid_argument("resolutions must be ascending");
  if (!resolutions.empty() && resolutions.back() >= reference_n)
    throw std::invalid_argument("reference resolution must exceed all study resolutions");

  const RunArtifacts ref =
      run_restricted_solve(field, airspeed, x0, ball_radius, reference_n, tol, scheme);
  const WindBounds wb = bounds(field);

  std::vector<ResolutionReport> rows;
  for (int n : resolutions) {
    const RunArtifacts run =
        run_restricted_solve(field, airspeed, x0, ball_radius, n, tol, scheme);
    rows.push_back(analyze_against_reference(run, ref, wb, airspeed));
  }
  for (size_t i = 1; i < rows.size(); ++i)
    rows[i].order = std::log2(rows[i - 1].error / rows[i].error);
  return rows;
}

}  // namespace zermelo
