#pragma once

// Internal great-circle helpers shared by the geodesic engine and the
// planner sections.  Everything here works in ambient coordinates of any
// dimension (the circle, S^2, the hemisphere and S^3 all use it).

#include <cmath>
#include <optional>

#include "geoplan/numeric.hpp"
#include "geoplan/types.hpp"

namespace geoplan::arc {

/// Angle between unit vectors; the (sin, cos) pair fed to atan2 is symmetric
/// in (p, q) bit-for-bit, so distance symmetry is exact.
inline double sphere_angle(const Vec& p, const Vec& q) {
  const double c = p.dot(q);
  const double s = 0.5 * (p - q).norm() * (p + q).norm();
  return std::atan2(s, c);
}

/// Unit tangent u at p with q = cos(theta) p + sin(theta) u, or nullopt when
/// q is too close to -p for the direction to be meaningful.
inline std::optional<Vec> unit_toward(const Vec& p, const Vec& q) {
  Vec u = q - p.dot(q) * p;
  const double n = u.norm();
  if (n < 1e-12) return std::nullopt;
  return Vec(u / n);
}

/// Point at arclength s along the great circle through p in direction u.
inline Vec position(const Vec& p, const Vec& u, double s) {
  return std::cos(s) * p + std::sin(s) * u;
}

/// Minimum of z(s) = pz cos s + uz sin s over s in [0, S].
inline double min_z(double pz, double uz, double S) {
  double m = std::min(pz, pz * std::cos(S) + uz * std::sin(S));
  const double r = std::hypot(pz, uz);
  // The interior minimum -r occurs at s = atan2(uz, pz) + pi (mod 2*pi).
  double s = std::fmod(std::atan2(uz, pz) + kPi, kTwoPi);
  if (s <= 0.0) s += kTwoPi;
  if (s < S) m = std::min(m, -r);
  return m;
}

}  // namespace geoplan::arc
