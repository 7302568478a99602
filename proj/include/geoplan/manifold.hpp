#pragma once

#include <array>
#include <optional>
#include <string>

#include "json.hpp"

#include "geoplan/errors.hpp"
#include "geoplan/numeric.hpp"
#include "geoplan/types.hpp"

namespace geoplan {

enum class ManifoldKind { Sphere, FlatTorus, Ellipsoid, Hemisphere };
enum class Representation { Embedded, Chart };

/// Christoffel symbols of the canonical chart at a point; dim <= 3.
struct ChristoffelSymbols {
  int dim = 0;
  std::array<double, 27> values{};

  double operator()(int k, int i, int j) const {
    return values[(k * dim + i) * dim + j];
  }
  double& at(int k, int i, int j) { return values[(k * dim + i) * dim + j]; }
};

/// One of the four supported compact Riemannian manifolds, with its metric
/// data, volume sampler and (where one exists) a closed-form distance.
///
/// Representation: the round spheres, the hemisphere and the ellipsoid carry
/// points as ambient coordinate vectors (unit vectors, resp. surface points),
/// which keeps every operation regular at the chart poles.  Flat tori carry
/// points as angle tuples reduced to [0, 2*pi)^n.  Tangent components live in
/// the same coordinate system, and the induced inner product is the plain dot
/// product in both cases.
///
/// The canonical chart used by metric_tensor / christoffel:
///   Sphere(1)      (phi)              p = (cos phi, sin phi)
///   Sphere(2)      (theta, phi)       p = (sin t cos p, sin t sin p, cos t)
///   Sphere(3)      (chi, theta, phi)  first coordinate w = cos chi
///   Ellipsoid      (theta, phi)       p = (a sin t cos p, b sin t sin p, c cos t)
///   Hemisphere     same as Sphere(2)
///   FlatTorus(n)   the angles themselves
///
/// Instances are immutable after construction and safe to share between
/// threads; sampling requires one RngState per worker.
class ManifoldModel {
 public:
  static ManifoldModel sphere(int n);
  static ManifoldModel flat_torus(int n);
  static ManifoldModel ellipsoid(double a, double b, double c);
  static ManifoldModel hemisphere();

  /// Structured config records, e.g. {"kind":"sphere","n":2} or
  /// {"kind":"ellipsoid","a":1.0,"b":1.0,"c":1.2}.
  static ManifoldModel from_config(const nlohmann::json& config);
  nlohmann::json to_config() const;

  ManifoldKind kind() const { return kind_; }
  int dim() const { return dim_; }
  /// Number of entries in a coordinate vector (ambient or chart).
  int coord_dim() const { return coord_dim_; }
  bool has_boundary() const { return kind_ == ManifoldKind::Hemisphere; }
  Representation representation() const {
    return kind_ == ManifoldKind::FlatTorus ? Representation::Chart
                                            : Representation::Embedded;
  }
  const std::array<double, 3>& semi_axes() const { return axes_; }
  std::string name() const;

  // -- constraint handling ---------------------------------------------------

  /// Distance of the coordinate vector from satisfying the manifold
  /// constraint: | |p|-1 | for spheres, |x^2/a^2+...-1| for the ellipsoid,
  /// 0 for in-range torus angles.
  double constraint_residual(const Point& p) const;
  bool contains(const Point& p) const;
  /// Throws ConstraintViolation if p fails the manifold invariant.
  void validate(const Point& p) const;

  /// Unit normal of the constraint surface (embedded manifolds only).
  Vec surface_normal(const Point& p) const;
  /// Project an ambient/chart coordinate vector back onto the manifold.
  Point project(const Vec& coords) const;
  /// Remove the normal component (identity for chart manifolds).
  Vec tangent_project(const Point& p, const Vec& v) const;
  double tangent_residual(const TangentVector& v) const;
  void validate_tangent(const TangentVector& v) const;

  // -- metric data -------------------------------------------------------

  /// Riemannian inner product of tangent components at p.
  double inner(const Point& p, const Vec& u, const Vec& v) const;
  double norm(const Point& p, const Vec& u) const;

  Vec to_chart(const Point& p) const;
  Point from_chart(const Vec& chart) const;
  /// Metric matrix in the canonical chart at chart coordinates.
  Mat chart_metric(const Vec& chart) const;
  /// Metric matrix of the canonical chart at a point (ConstraintViolation if
  /// p is off the manifold).
  Mat metric_tensor(const Point& p) const;
  /// Christoffel symbols of the canonical chart: analytic for spheres, tori
  /// and the hemisphere, central finite differences of the metric (step 1e-6)
  /// for the ellipsoid.
  ChristoffelSymbols christoffel(const Point& p) const;

  /// Gauss curvature at p; defined for the 2-dimensional manifolds and for
  /// flat tori (0).  Used by the Jacobi-field machinery.
  double gaussian_curvature(const Point& p) const;

  // -- sampling ----------------------------------------------------------

  /// One point distributed by normalized Riemannian volume.
  Point sample_point(RngState& rng) const;
  /// Unit tangent vector at p, uniform on the unit sphere of T_p.
  Vec sample_unit_tangent(const Point& p, RngState& rng) const;

  // -- global quantities ---------------------------------------------------

  /// Exact closed-form geodesic distance, or nullopt (ellipsoid).
  std::optional<double> closed_form_distance(const Point& p,
                                             const Point& q) const;
  /// Riemannian volume (surface area); closed form except for the ellipsoid,
  /// which is integrated once at construction.
  double volume() const { return volume_; }
  /// Upper bound for the diameter; used to reject runaway planner paths.
  double diameter_bound() const;

 private:
  ManifoldModel(ManifoldKind kind, int dim, std::array<double, 3> axes);

  double area_density(double theta, double phi) const;  // ellipsoid chart
  void init_ellipsoid_cache();

  ManifoldKind kind_;
  int dim_;
  int coord_dim_;
  std::array<double, 3> axes_{1.0, 1.0, 1.0};
  double volume_ = 0.0;
  double max_area_density_ = 0.0;  // rejection-sampling envelope
};

}  // namespace geoplan
