#pragma once

#include <vector>

#include "zermelo/characteristics.hpp"
#include "zermelo/hjb.hpp"
#include "zermelo/trimesh.hpp"

namespace zermelo {

/// Flagged singular simplices together with the temporal band of the given
/// error depth around them.
struct TrustRegion {
  std::vector<int> flagged;        // singular simplex ids
  std::vector<char> flagged_mask;  // per triangle
  std::vector<char> marked_tris;   // the band, per triangle
  std::vector<char> marked_nodes;  // the band, per node
  double epsilon = 0.0;
  double angle_threshold_deg = 90.0;
};

/// A triangle is flagged when the largest pairwise angle between the inflow
/// directions of its three nodes exceeds the threshold. Triangles touching
/// the origin circle are exempt. Flags whose minimizer chains continue for
/// more than `chain_depth_hops` further hops downstream are mid-flow
/// artifacts, not locally maximal arrival times, and are discarded.
std::vector<int> detect_singular_simplices(const ValueField& values, const TriMesh& mesh,
                                           double angle_threshold_deg = 90.0,
                                           double chain_depth_hops = 4.0);

/// Secondary detector: discrete divergence of the inflow direction field per
/// triangle; a triangle is flagged when the flux divergence drops below
/// -threshold_scale / diameter.
std::vector<int> detect_singular_simplices_divergence(const ValueField& values,
                                                      const TriMesh& mesh,
                                                      double threshold_scale = 1.0);

/// Temporal band around the flagged simplices: walk the minimizer chains
/// backward until `2 epsilon` of arrival time is consumed, and mark every
/// node whose chain passes through a flagged simplex downstream.
TrustRegion trust_region(const ValueField& values, const TriMesh& mesh,
                         const std::vector<int>& flagged, double epsilon);

struct CertifyReport {
  bool safe = false;
  double epsilon = 0.0;
  double arrival_time = 0.0;
  double nearest_marked_distance = 0.0;  // from the destination
  Trajectory trajectory;
};

/// A destination is safe when its containing triangle and the full
/// backtracked chain avoid the marked band.
CertifyReport certify_destination(const ValueField& values, const TriMesh& mesh,
                                  const WindField& field, double airspeed,
                                  const TrustRegion& region, const Point2& destination);

/// Grow a triangle mask by whole node patches, `rings` times.
std::vector<char> dilate_mask(const TriMesh& mesh, const std::vector<char>& mask, int rings);

}  // namespace zermelo
