#pragma once

#include <vector>

#include "geoplan/manifold.hpp"
#include "geoplan/types.hpp"

namespace geoplan {

/// How a cut time was detected.
enum class CutDetection { None, Conjugate, Minimality };

/// Result of probing the cut time along one unit direction.
struct CutProbe {
  TangentVector direction;
  double cut_time = 0.0;        // arclength to the cut point
  double conjugate_time = 0.0;  // first conjugate time, or +inf (flat)
  CutDetection detection = CutDetection::None;
};

struct GeodesicSample {
  Point point;
  Vec velocity;
};

/// Dense output of a geodesic initial-value solve over t in [0, 1], sampled
/// at t = i / grid_size.  Closed-form manifolds are re-evaluated exactly by
/// position(); the ellipsoid interpolates the stored samples (cubic Hermite
/// followed by projection back onto the surface).
struct GeodesicSolution {
  const ManifoldModel* manifold = nullptr;
  TangentVector initial;
  std::vector<GeodesicSample> samples;  // samples.size() == grid_size + 1
  int grid_size = 0;                    // number of intervals, >= 64
  double speed_drift = 0.0;             // max relative speed deviation

  Point position(double t) const;
  Vec velocity(double t) const;
  const Point& endpoint() const { return samples.back().point; }
};

struct LogOptions {
  double cut_tolerance = 1e-6;
  double residual_tolerance = 1e-8;
  int max_iterations = 50;
  int starts = 8;
};

/// Endpoint gamma(t) of the geodesic with gamma(0) = v.base, gamma'(0) = v.
/// Closed-form on spheres, tori and the hemisphere; RK4 with per-step
/// projection on the ellipsoid, step 1/256 of arclength halved until the
/// speed drift is <= 1e-8.
///
/// Throws LeftManifoldError if a hemisphere geodesic exits z >= 0, and
/// IntegrationFailure if step refinement cannot meet the drift bound.
Point exp_map(const ManifoldModel& m, const TangentVector& v, double t);

/// Dense version of exp_map over t in [0, 1].
GeodesicSolution solve_geodesic(const ManifoldModel& m, const TangentVector& v,
                                int grid_size = 256);

/// Riemannian logarithm: the unique v with exp_map(v, 1) = q and
/// |v|_g = d(p, q).  Closed-form inversion on spheres, tori and the
/// hemisphere; damped-Newton shooting with 8 starts (round-sphere warm start
/// plus tangent-plane rotations) on the ellipsoid.
///
/// Throws CutLocusError when q lies within opts.cut_tolerance of cut(p)
/// (inversion is ambiguous there; callers fall back to another section) and
/// NoConvergence when every shooting start fails.
TangentVector log_map(const ManifoldModel& m, const Point& p, const Point& q,
                      const LogOptions& opts = {});

/// Cut time along a unit direction: pi on spheres, brute force over covering
/// translates on flat tori, min(first Jacobi zero, first minimality failure)
/// on the ellipsoid (both bisected to 1e-6).
CutProbe cut_time(const ManifoldModel& m, const TangentVector& v);

/// Membership test for the cut-locus band: true iff d(p, q) reaches the cut
/// time of the connecting direction minus tol.
bool in_cut_locus(const ManifoldModel& m, const Point& p, const Point& q,
                  double tol = 1e-6);

/// Geodesic distance: closed form where available, shooting otherwise.
double distance(const ManifoldModel& m, const Point& p, const Point& q);

}  // namespace geoplan
