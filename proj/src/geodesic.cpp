#include "geoplan/geodesic.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "arc_util.hpp"

namespace geoplan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDriftTarget = 1e-8;
// Points may sit 1e-12 below the hemisphere equator; a legitimate minor arc
// between two such points can dip a few orders of magnitude further without
// ever genuinely leaving the surface, so the exit check uses a looser band.
constexpr double kHemisphereExitTol = 1e-9;

using Eigen::Vector3d;

Vector3d to3(const Vec& v) { return Vector3d(v[0], v[1], v[2]); }

Vec from3(const Vector3d& v) { return vec3(v[0], v[1], v[2]); }

void check_hemisphere_arc(const Vec& p, const Vec& u, double S) {
  if (S <= 0.0) return;
  if (arc::min_z(p[2], u[2], S) < -kHemisphereExitTol) {
    throw LeftManifoldError("geodesic leaves the closed hemisphere");
  }
}

// -- ellipsoid ambient integration -------------------------------------------
//
// The geodesic ODE in ambient form: x'' = -(x'.D x' / x.D^2 x) D x with
// D = diag(1/a^2, 1/b^2, 1/c^2); x'' is the normal component forced by the
// constraint x.D x = 1.  Each RK4 step is followed by projection back onto
// the surface, which keeps the constraint at roundoff level.

struct EllipsoidOde {
  Vector3d d;  // diagonal of D

  explicit EllipsoidOde(const std::array<double, 3>& axes) {
    for (int i = 0; i < 3; ++i) d[i] = 1.0 / (axes[i] * axes[i]);
  }

  Vector3d accel(const Vector3d& x, const Vector3d& v) const {
    const Vector3d dx = d.cwiseProduct(x);
    const double num = v.dot(d.cwiseProduct(v));
    const double den = x.dot(d.cwiseProduct(dx));
    return -(num / den) * dx;
  }

  void project(Vector3d& x, Vector3d& v) const {
    x /= std::sqrt(x.dot(d.cwiseProduct(x)));
    const Vector3d n = d.cwiseProduct(x).normalized();
    v -= n.dot(v) * n;
  }

  void step(Vector3d& x, Vector3d& v, double h) const {
    const Vector3d k1x = v, k1v = accel(x, v);
    const Vector3d k2x = v + 0.5 * h * k1v,
                   k2v = accel(x + 0.5 * h * k1x, v + 0.5 * h * k1v);
    const Vector3d k3x = v + 0.5 * h * k2v,
                   k3v = accel(x + 0.5 * h * k2x, v + 0.5 * h * k2v);
    const Vector3d k4x = v + h * k3v, k4v = accel(x + h * k3x, v + h * k3v);
    x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    project(x, v);
  }
};

struct EndState {
  Vector3d x;
  Vector3d v;
  double drift = 0.0;
};

EndState integrate_endpoint(const EllipsoidOde& ode, Vector3d x, Vector3d v,
                            double T, int steps) {
  const double speed0 = v.norm();
  const double h = T / steps;
  double drift = 0.0;
  for (int i = 0; i < steps; ++i) {
    ode.step(x, v, h);
    drift = std::max(drift, std::abs(v.norm() - speed0));
  }
  return {x, v, speed0 > 0.0 ? drift / speed0 : 0.0};
}

struct DenseAmbient {
  std::vector<Vector3d> x;
  std::vector<Vector3d> v;
  double drift = 0.0;
};

DenseAmbient integrate_dense(const EllipsoidOde& ode, Vector3d x, Vector3d v,
                             double T, int steps) {
  DenseAmbient out;
  out.x.reserve(steps + 1);
  out.v.reserve(steps + 1);
  out.x.push_back(x);
  out.v.push_back(v);
  const double speed0 = v.norm();
  const double h = T / steps;
  double drift = 0.0;
  for (int i = 0; i < steps; ++i) {
    ode.step(x, v, h);
    drift = std::max(drift, std::abs(v.norm() - speed0));
    out.x.push_back(x);
    out.v.push_back(v);
  }
  out.drift = speed0 > 0.0 ? drift / speed0 : 0.0;
  return out;
}

int base_step_count(double arclength) {
  return std::max(64, static_cast<int>(std::ceil(256.0 * arclength)));
}

// -- shooting (ellipsoid logarithm) ------------------------------------------

struct TangentBasis {
  Vector3d n, e1, e2;
};

TangentBasis tangent_basis(const ManifoldModel& m, const Point& p) {
  TangentBasis b;
  b.n = to3(m.surface_normal(p));
  Vector3d seed = std::abs(b.n[2]) < 0.9 ? Vector3d::UnitZ() : Vector3d::UnitX();
  b.e1 = b.n.cross(seed).normalized();
  b.e2 = b.n.cross(b.e1);
  return b;
}

struct Converged {
  Vector3d v;
  double norm;
  Vector3d unit;
};

struct MultiStartResult {
  std::vector<Converged> solutions;
  double best_residual = kInf;
  bool early_unique = false;  // accepted below the uniqueness bound
};

/// Norm bound below which the minimal geodesic is provably unique (min of the
/// conjugate-time lower bound pi/sqrt(Kmax) and half the shortest principal
/// ellipse), with a 1% margin.
double unique_log_bound(const std::array<double, 3>& axes) {
  std::array<double, 3> s = axes;
  std::sort(s.begin(), s.end());
  return 0.99 * std::min(kPi * s[0] * s[1] / s[2], kPi * s[0]);
}

MultiStartResult multi_start_shoot(const ManifoldModel& m, const Point& p,
                                   const Point& q, const LogOptions& opts) {
  const EllipsoidOde ode(m.semi_axes());
  const TangentBasis basis = tangent_basis(m, p);
  const Vector3d x0 = to3(p.coords);
  const Vector3d xq = to3(q.coords);

  // Round-sphere warm start: map both points to the unit sphere through the
  // axis scaling, take the exact sphere logarithm, map the velocity back.
  Vector3d ps, qs;
  for (int i = 0; i < 3; ++i) {
    ps[i] = p.coords[i] / m.semi_axes()[i];
    qs[i] = q.coords[i] / m.semi_axes()[i];
  }
  ps.normalize();
  qs.normalize();
  const double theta = std::atan2(0.5 * (ps - qs).norm() * (ps + qs).norm(),
                                  ps.dot(qs));
  Vector3d us = qs - ps.dot(qs) * ps;
  if (us.norm() < 1e-12) {
    us = std::abs(ps[2]) < 0.9 ? ps.cross(Vector3d::UnitZ())
                               : ps.cross(Vector3d::UnitX());
  }
  us.normalize();
  Vector3d warm;
  for (int i = 0; i < 3; ++i) warm[i] = m.semi_axes()[i] * us[i] * theta;
  warm -= basis.n.dot(warm) * basis.n;
  if (warm.norm() < 1e-15) warm = 1e-12 * basis.e1;

  static constexpr std::array<double, 8> kAngles = {0.0, 0.4, -0.4, 0.9,
                                                    -0.9, 1.6, -1.6, kPi};
  const double accept = unique_log_bound(m.semi_axes());
  const int n_starts = std::clamp(opts.starts, 1, 8);

  MultiStartResult result;
  for (int s = 0; s < n_starts; ++s) {
    const double a = kAngles[s];
    Vector3d v = std::cos(a) * warm + std::sin(a) * basis.n.cross(warm);
    v -= basis.n.dot(v) * basis.n;
    const int steps = std::max(
        128, static_cast<int>(std::ceil(512.0 * (v.norm() + 0.5))));
    auto endpoint = [&](const Vector3d& vv) {
      return integrate_endpoint(ode, x0, vv, 1.0, steps).x;
    };

    Vector3d r = endpoint(v) - xq;
    const double target = 0.1 * opts.residual_tolerance;
    for (int iter = 0; iter < opts.max_iterations && r.norm() > target;
         ++iter) {
      const double h = 1e-7 * std::max(1.0, v.norm());
      Eigen::Matrix<double, 3, 2> J;
      J.col(0) = (endpoint(v + h * basis.e1) - (r + xq)) / h;
      J.col(1) = (endpoint(v + h * basis.e2) - (r + xq)) / h;
      const Eigen::Vector2d delta =
          J.colPivHouseholderQr().solve(-r);
      double alpha = 1.0;
      bool improved = false;
      for (int halve = 0; halve < 12; ++halve) {
        const Vector3d v_try =
            v + alpha * (delta[0] * basis.e1 + delta[1] * basis.e2);
        const Vector3d r_try = endpoint(v_try) - xq;
        if (r_try.norm() < r.norm()) {
          v = v_try;
          r = r_try;
          improved = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!improved) break;  // stalled; abandon this start
    }

    result.best_residual = std::min(result.best_residual, r.norm());
    if (r.norm() <= opts.residual_tolerance) {
      const double n = v.norm();
      result.solutions.push_back(
          {v, n, n > 0.0 ? Vector3d(v / n) : basis.e1});
      if (n <= accept) {
        result.early_unique = true;
        return result;  // provably the unique minimal geodesic
      }
    }
  }
  std::sort(result.solutions.begin(), result.solutions.end(),
            [](const Converged& a, const Converged& b) {
              return a.norm < b.norm;
            });
  return result;
}

// -- Jacobi fields ------------------------------------------------------------

/// First zero of the scalar Jacobi field j'' + K(gamma(t)) j = 0, j(0) = 0,
/// j'(0) = 1 along the unit-speed geodesic from (x0, v0); nullopt if none in
/// (0, T].  Refined inside the bracketing step by bisection on the cubic
/// Hermite interpolant of (j, j').
std::optional<double> first_jacobi_zero(const ManifoldModel& m,
                                        const Vector3d& x0, const Vector3d& v0,
                                        double T) {
  const EllipsoidOde ode(m.semi_axes());
  const int steps = base_step_count(T);
  const double h = T / steps;
  auto curvature = [&](const Vector3d& x) {
    return m.gaussian_curvature(Point{from3(x)});
  };

  Vector3d x = x0, v = v0;
  double j = 0.0, jp = 1.0;
  for (int i = 0; i < steps; ++i) {
    // One RK4 step of the coupled system (x, v, j, j').
    const Vector3d k1x = v, k1v = ode.accel(x, v);
    const double k1j = jp, k1jp = -curvature(x) * j;
    const Vector3d x2 = x + 0.5 * h * k1x, v2 = v + 0.5 * h * k1v;
    const Vector3d k2x = v2, k2v = ode.accel(x2, v2);
    const double k2j = jp + 0.5 * h * k1jp,
                 k2jp = -curvature(x2) * (j + 0.5 * h * k1j);
    const Vector3d x3 = x + 0.5 * h * k2x, v3 = v + 0.5 * h * k2v;
    const Vector3d k3x = v3, k3v = ode.accel(x3, v3);
    const double k3j = jp + 0.5 * h * k2jp,
                 k3jp = -curvature(x3) * (j + 0.5 * h * k2j);
    const Vector3d x4 = x + h * k3x, v4 = v + h * k3v;
    const Vector3d k4x = v4, k4v = ode.accel(x4, v4);
    const double k4j = jp + h * k3jp, k4jp = -curvature(x4) * (j + h * k3j);

    const double j_new = j + h / 6.0 * (k1j + 2.0 * k2j + 2.0 * k3j + k4j);
    const double jp_new =
        jp + h / 6.0 * (k1jp + 2.0 * k2jp + 2.0 * k3jp + k4jp);
    x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    ode.project(x, v);

    if (i > 0 && j > 0.0 && j_new <= 0.0) {
      // Bracketed in [t_i, t_i + h]; bisect the Hermite cubic.
      const double t_lo = i * h;
      auto hermite = [&](double s) {
        const double s2 = s * s, s3 = s2 * s;
        return (2 * s3 - 3 * s2 + 1) * j + (s3 - 2 * s2 + s) * h * jp +
               (-2 * s3 + 3 * s2) * j_new + (s3 - s2) * h * jp_new;
      };
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (hermite(mid) > 0.0 ? lo : hi) = mid;
      }
      return t_lo + 0.5 * (lo + hi) * h;
    }
    j = j_new;
    jp = jp_new;
  }
  return std::nullopt;
}

double kmin_bound(const std::array<double, 3>& axes) {
  std::array<double, 3> s = axes;
  std::sort(s.begin(), s.end());
  // K = 1/(a^2 b^2 c^2 h^4) is minimized at the ends of the shortest axis,
  // where h = 1/s[0].
  return (s[0] * s[0]) / (s[1] * s[1] * s[2] * s[2]);
}

double shooting_distance_impl(const ManifoldModel& m, const Point& p,
                              const Point& q) {
  LogOptions opts;
  const MultiStartResult r = multi_start_shoot(m, p, q, opts);
  if (r.solutions.empty()) return kInf;  // conservative: cannot certify
  return r.solutions.front().norm;
}

}  // namespace

// ---------------------------------------------------------------------------
// GeodesicSolution

Point GeodesicSolution::position(double t) const {
  const ManifoldModel& m = *manifold;
  const Vec& p = initial.base.coords;
  const Vec& w = initial.components;
  switch (m.kind()) {
    case ManifoldKind::Sphere:
    case ManifoldKind::Hemisphere: {
      const double speed = w.norm();
      if (speed == 0.0) return initial.base;
      return Point{arc::position(p, Vec(w / speed), t * speed)};
    }
    case ManifoldKind::FlatTorus:
      return m.project(p + t * w);
    case ManifoldKind::Ellipsoid: {
      const double tc = std::clamp(t, 0.0, 1.0);
      const int i = std::min(static_cast<int>(tc * grid_size), grid_size - 1);
      const double s = tc * grid_size - i;
      const double h = 1.0 / grid_size;
      const double s2 = s * s, s3 = s2 * s;
      const Vec interp =
          (2 * s3 - 3 * s2 + 1) * samples[i].point.coords +
          (s3 - 2 * s2 + s) * h * samples[i].velocity +
          (-2 * s3 + 3 * s2) * samples[i + 1].point.coords +
          (s3 - s2) * h * samples[i + 1].velocity;
      return m.project(interp);
    }
  }
  throw Error("unreachable");
}

Vec GeodesicSolution::velocity(double t) const {
  const ManifoldModel& m = *manifold;
  const Vec& p = initial.base.coords;
  const Vec& w = initial.components;
  switch (m.kind()) {
    case ManifoldKind::Sphere:
    case ManifoldKind::Hemisphere: {
      const double speed = w.norm();
      if (speed == 0.0) return Vec(Vec::Zero(p.size()));
      const Vec u = w / speed;
      const double s = t * speed;
      return Vec(speed * (-std::sin(s) * p + std::cos(s) * u));
    }
    case ManifoldKind::FlatTorus:
      return w;
    case ManifoldKind::Ellipsoid: {
      const double tc = std::clamp(t, 0.0, 1.0);
      const int i = std::min(static_cast<int>(tc * grid_size), grid_size - 1);
      const double s = tc * grid_size - i;
      const double h = 1.0 / grid_size;
      const double s2 = s * s;
      const Vec deriv =
          ((6 * s2 - 6 * s) * samples[i].point.coords +
           (3 * s2 - 4 * s + 1) * h * samples[i].velocity +
           (-6 * s2 + 6 * s) * samples[i + 1].point.coords +
           (3 * s2 - 2 * s) * h * samples[i + 1].velocity) /
          h;
      return m.tangent_project(position(tc), deriv);
    }
  }
  throw Error("unreachable");
}

// ---------------------------------------------------------------------------
// exp / solve

Point exp_map(const ManifoldModel& m, const TangentVector& v, double t) {
  m.validate_tangent(v);
  const Vec& p = v.base.coords;
  const double speed = v.components.norm();
  if (speed == 0.0 || t == 0.0) return v.base;
  switch (m.kind()) {
    case ManifoldKind::Sphere:
      return Point{arc::position(p, Vec(v.components / speed), t * speed)};
    case ManifoldKind::Hemisphere: {
      const Vec u = v.components / speed;
      check_hemisphere_arc(p, u, t * speed);
      return Point{arc::position(p, u, t * speed)};
    }
    case ManifoldKind::FlatTorus:
      return m.project(p + t * v.components);
    case ManifoldKind::Ellipsoid: {
      const EllipsoidOde ode(m.semi_axes());
      int steps = base_step_count(speed * t);
      for (int refine = 0; refine < 8; ++refine, steps *= 2) {
        const EndState end =
            integrate_endpoint(ode, to3(p), to3(v.components), t, steps);
        if (end.drift <= kDriftTarget) return Point{from3(end.x)};
      }
      throw IntegrationFailure("speed drift bound not reached on " + m.name());
    }
  }
  throw Error("unreachable");
}

GeodesicSolution solve_geodesic(const ManifoldModel& m, const TangentVector& v,
                                int grid_size) {
  m.validate_tangent(v);
  if (grid_size < 64) throw ConfigError("geodesic grid_size must be >= 64");
  GeodesicSolution sol;
  sol.manifold = &m;
  sol.initial = v;
  sol.grid_size = grid_size;
  sol.samples.reserve(grid_size + 1);

  if (m.kind() == ManifoldKind::Ellipsoid) {
    const EllipsoidOde ode(m.semi_axes());
    const double speed = v.components.norm();
    int per = std::max(
        1, (base_step_count(speed) + grid_size - 1) / grid_size);
    for (int refine = 0;; ++refine, per *= 2) {
      const DenseAmbient dense = integrate_dense(
          ode, to3(v.base.coords), to3(v.components), 1.0, grid_size * per);
      if (dense.drift <= kDriftTarget || speed == 0.0) {
        for (int i = 0; i <= grid_size; ++i) {
          sol.samples.push_back(
              {Point{from3(dense.x[i * per])}, from3(dense.v[i * per])});
        }
        sol.speed_drift = dense.drift;
        break;
      }
      if (refine >= 7) {
        throw IntegrationFailure("speed drift bound not reached on " +
                                 m.name());
      }
    }
    return sol;
  }

  // Closed-form manifolds: evaluate exactly at the grid nodes.
  if (m.kind() == ManifoldKind::Hemisphere && v.components.norm() > 0.0) {
    check_hemisphere_arc(v.base.coords, Vec(v.components / v.components.norm()),
                         v.components.norm());
  }
  for (int i = 0; i <= grid_size; ++i) {
    const double t = static_cast<double>(i) / grid_size;
    GeodesicSample s;
    s.point = sol.position(t);  // manifold already set; uses closed form
    s.velocity = sol.velocity(t);
    sol.samples.push_back(std::move(s));
  }
  sol.speed_drift = 0.0;
  return sol;
}

// ---------------------------------------------------------------------------
// log

TangentVector log_map(const ManifoldModel& m, const Point& p, const Point& q,
                      const LogOptions& opts) {
  m.validate(p);
  m.validate(q);
  switch (m.kind()) {
    case ManifoldKind::Sphere:
    case ManifoldKind::Hemisphere: {
      const double theta = arc::sphere_angle(p.coords, q.coords);
      if (theta >= kPi - opts.cut_tolerance) {
        throw CutLocusError("pair within cut tolerance of the antipode on " +
                            m.name());
      }
      const auto u = arc::unit_toward(p.coords, q.coords);
      if (!u) return {p, Vec(Vec::Zero(m.coord_dim()))};
      return {p, Vec(theta * *u)};
    }
    case ManifoldKind::FlatTorus: {
      Vec w(m.dim());
      for (int i = 0; i < m.dim(); ++i) {
        const double d = wrap_pi(q.coords[i] - p.coords[i]);
        if (std::abs(d) >= kPi - opts.cut_tolerance) {
          throw CutLocusError(
              "coordinate difference within cut tolerance of pi on " +
              m.name());
        }
        w[i] = d;
      }
      return {p, w};
    }
    case ManifoldKind::Ellipsoid: {
      if ((p.coords - q.coords).norm() < 1e-15) {
        return {p, Vec(Vec::Zero(3))};
      }
      const MultiStartResult r = multi_start_shoot(m, p, q, opts);
      if (r.solutions.empty()) {
        throw NoConvergence("shooting failed from every start on " + m.name(),
                            r.best_residual);
      }
      const Converged& best = r.solutions.front();
      if (!r.early_unique) {
        for (std::size_t i = 1; i < r.solutions.size(); ++i) {
          const Converged& other = r.solutions[i];
          if ((other.unit - best.unit).norm() > 1e-2 &&
              other.norm - best.norm <= opts.cut_tolerance) {
            throw CutLocusError(
                "two minimal geodesic candidates of equal length on " +
                m.name());
          }
        }
        const double band = 1.0 + opts.cut_tolerance / std::max(best.norm, 1e-9);
        const auto conj = first_jacobi_zero(
            m, to3(p.coords), Vector3d(best.unit), band * best.norm);
        if (conj && *conj <= best.norm + opts.cut_tolerance) {
          throw CutLocusError("conjugate point inside the geodesic on " +
                              m.name());
        }
      }
      return {p, from3(best.v)};
    }
  }
  throw Error("unreachable");
}

// ---------------------------------------------------------------------------
// cut machinery

CutProbe cut_time(const ManifoldModel& m, const TangentVector& v) {
  m.validate_tangent(v);
  if (std::abs(v.components.norm() - 1.0) > 1e-9) {
    throw ConstraintViolation("cut_time requires a unit tangent vector");
  }
  CutProbe probe;
  probe.direction = v;
  switch (m.kind()) {
    case ManifoldKind::Sphere:
    case ManifoldKind::Hemisphere:
      probe.cut_time = kPi;
      probe.conjugate_time = kPi;
      probe.detection = CutDetection::Conjugate;
      return probe;
    case ManifoldKind::FlatTorus: {
      // Brute force over covering translates w = 2*pi*k: the segment stops
      // minimizing at t with |t v| = |t v - w|, i.e. t = |w|^2 / (2 v.w).
      double best = kInf;
      const int n = m.dim();
      std::array<int, 3> k{0, 0, 0};
      const int range = 2;
      const int total = static_cast<int>(std::pow(2 * range + 1, n));
      for (int idx = 0; idx < total; ++idx) {
        int rem = idx;
        bool zero = true;
        for (int i = 0; i < n; ++i) {
          k[i] = rem % (2 * range + 1) - range;
          rem /= 2 * range + 1;
          zero = zero && k[i] == 0;
        }
        if (zero) continue;
        double w_dot_v = 0.0, w_sq = 0.0;
        for (int i = 0; i < n; ++i) {
          const double w = kTwoPi * k[i];
          w_dot_v += w * v.components[i];
          w_sq += w * w;
        }
        if (w_dot_v > 1e-12) best = std::min(best, w_sq / (2.0 * w_dot_v));
      }
      probe.cut_time = best;
      probe.conjugate_time = kInf;
      probe.detection = CutDetection::Minimality;
      return probe;
    }
    case ManifoldKind::Ellipsoid: {
      const Vector3d x0 = to3(v.base.coords);
      const Vector3d u = to3(v.components);
      const double conj_horizon =
          1.05 * kPi / std::sqrt(kmin_bound(m.semi_axes())) + 0.1;
      const auto conj = first_jacobi_zero(m, x0, u, conj_horizon);
      probe.conjugate_time = conj ? *conj : kInf;

      // Minimality failure: bisection on d(p, gamma(t)) < t - 1e-7.
      double hi = std::min(probe.conjugate_time, 1.05 * m.diameter_bound());
      const EllipsoidOde ode(m.semi_axes());
      const int steps = base_step_count(hi);
      const DenseAmbient dense = integrate_dense(ode, x0, u, hi, steps);
      auto gamma = [&](double t) {
        // One RK4 substep from the nearest stored node below t.
        const double s = t / hi * steps;
        const int i = std::min(static_cast<int>(s), steps - 1);
        Vector3d x = dense.x[i], vv = dense.v[i];
        const double rest = (s - i) * hi / steps;
        if (rest > 0.0) ode.step(x, vv, rest);
        return x;
      };
      auto fails = [&](double t) {
        const Point target{from3(gamma(t))};
        return shooting_distance_impl(m, v.base, target) < t - 1e-7;
      };
      if (!fails(hi - 1e-4)) {
        probe.cut_time = probe.conjugate_time;
        probe.detection = CutDetection::Conjugate;
        if (!conj) {
          throw IntegrationFailure(
              "no cut point detected inside the search horizon on " +
              m.name());
        }
        return probe;
      }
      double lo = hi / 8.0;
      while (lo > 1e-3 && fails(lo)) lo *= 0.5;
      for (int it = 0; it < 32 && hi - lo > 1e-6; ++it) {
        const double mid = 0.5 * (lo + hi);
        (fails(mid) ? hi : lo) = mid;
      }
      const double minimality = 0.5 * (lo + hi);
      if (minimality < probe.conjugate_time - 1e-6) {
        probe.cut_time = minimality;
        probe.detection = CutDetection::Minimality;
      } else {
        probe.cut_time = std::min(minimality, probe.conjugate_time);
        probe.detection = CutDetection::Conjugate;
      }
      return probe;
    }
  }
  throw Error("unreachable");
}

bool in_cut_locus(const ManifoldModel& m, const Point& p, const Point& q,
                  double tol) {
  m.validate(p);
  m.validate(q);
  switch (m.kind()) {
    case ManifoldKind::Sphere:
    case ManifoldKind::Hemisphere:
      return arc::sphere_angle(p.coords, q.coords) >= kPi - tol;
    case ManifoldKind::FlatTorus: {
      for (int i = 0; i < m.dim(); ++i) {
        if (std::abs(wrap_pi(q.coords[i] - p.coords[i])) >= kPi - tol) {
          return true;
        }
      }
      return false;
    }
    case ManifoldKind::Ellipsoid: {
      // The logarithm already runs the numerical cut tests (equal-length
      // candidate pair, conjugate point inside the band); membership is
      // exactly "the inversion is ambiguous at this tolerance".
      LogOptions opts;
      opts.cut_tolerance = tol;
      try {
        log_map(m, p, q, opts);
        return false;
      } catch (const CutLocusError&) {
        return true;
      } catch (const NoConvergence&) {
        return true;  // conservative: treat unresolvable pairs as cut pairs
      }
    }
  }
  throw Error("unreachable");
}

double distance(const ManifoldModel& m, const Point& p, const Point& q) {
  if (const auto d = m.closed_form_distance(p, q)) return *d;
  m.validate(p);
  m.validate(q);
  if ((p.coords - q.coords).norm() < 1e-15) return 0.0;
  const double d = shooting_distance_impl(m, p, q);
  if (!std::isfinite(d)) {
    throw NoConvergence("shooting distance failed on " + m.name(),
                        std::numeric_limits<double>::quiet_NaN());
  }
  return d;
}

}  // namespace geoplan
