#pragma once

#include <vector>

#include "zermelo/hjb.hpp"
#include "zermelo/singularity.hpp"
#include "zermelo/trimesh.hpp"
#include "zermelo/windfield.hpp"

namespace zermelo {

/// Largest spectral norm of discretely recovered Hessians: per interior node
/// outside the mask, a least-squares quadratic fit over the two-ring patch.
/// Underdetermined fits are skipped (counted in *skipped when given).
double hessian_sup_estimate(const ValueField& values, const TriMesh& mesh,
                            const std::vector<char>& masked_tris, int* skipped = nullptr);

/// Closed-form discretization error bound:
///   h theta (H + 2 c1 sqrt(v) (v+c0)^2 / (v-c0)^{9/2}) (v+c0) max|u| + 7h/(v-c0).
double apriori_bound(double h, double aspect, double hessian_sup, double c0, double c1,
                     double airspeed, double max_value);

struct AposterioriResult {
  double masked = 0.0;    // sup over nodes outside the mask
  double unmasked = 0.0;  // sup over all nodes
};

/// Sup difference between a nodal field and a finer reference solution
/// interpolated at the coarse nodes. The reference grid must be at least
/// twice as fine.
AposterioriResult aposteriori_error(const ValueField& values, const ValueField& reference,
                                    const TriMesh& mesh, const TriMesh& reference_mesh,
                                    const std::vector<char>& masked_tris);

/// First-order Richardson factor turning |u_h - u_ref| into an estimate of
/// |u_h - u|: 1 / (1 - h_ref / h).
double reference_inflation(double h_coarse, double h_reference);

/// One restricted solve with its singular structure attached. `flagged` is
/// the cut-locus estimate at the production threshold; `kink_flags` is the
/// low-threshold detection that the regular-region mask is built from (the
/// Hessian supremum must exclude every crease of the nodal field, not only
/// the strong collisions).
struct RunArtifacts {
  int n = 0;
  TriMesh mesh;
  BoundaryOracle oracle;
  ValueField values;
  std::vector<int> flagged;
  std::vector<int> kink_flags;
  std::vector<char> premask;  // kink simplices grown by two rings
};

RunArtifacts run_restricted_solve(const WindField& field, double airspeed, const Point2& x0,
                                  double ball_radius, int n, double tol,
                                  SweepScheme scheme = SweepScheme::GaussSeidel,
                                  double angle_threshold_deg = 90.0,
                                  double kink_threshold_deg = 25.0);

struct ResolutionReport {
  int n = 0;
  double h = 0.0;
  double aspect = 0.0;
  double hessian_sup = 0.0;
  double max_value = 0.0;
  double apriori = 0.0;
  double error = 0.0;             // a-posteriori, masked nodes excluded
  double error_unmasked = 0.0;    // a-posteriori over all nodes
  double epsilon = 0.0;           // inflated a-posteriori (certification level)
  double order = 0.0;             // vs the previous row; 0 for the first
  int flagged_count = 0;
  int masked_count = 0;
  int skipped_fits = 0;
};

/// Error report of one run against a finer reference: preliminary mask from
/// the kink simplices, band from the inflated a-posteriori error, then the
/// bound on the band-masked region. The regular region excludes a temporal
/// band of at least `mask_tau` around every crease: the Hessian supremum is
/// only finite at a fixed time depth from the singular set (the cut-locus
/// cusps focus), so the exclusion depth must not shrink with the grid.
ResolutionReport analyze_against_reference(const RunArtifacts& run, const RunArtifacts& ref,
                                           const WindBounds& wind_bounds, double airspeed,
                                           double mask_tau = 0.08);

/// Solves at each resolution plus the reference, and reports error, bound and
/// observed order per row (order = log2 of successive error ratios).
std::vector<ResolutionReport> convergence_study(const WindField& field, double airspeed,
                                                const Point2& x0, double ball_radius,
                                                const std::vector<int>& resolutions,
                                                int reference_n, double tol,
                                                SweepScheme scheme = SweepScheme::GaussSeidel);

}  // namespace zermelo
