#pragma once

#include <Eigen/Core>

namespace geoplan {

// Coordinate vectors are small (ambient dimension <= 4); fixed-capacity
// Eigen types keep everything on the stack.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 4, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 4, 4>;

/// A point on a manifold: ambient coordinates for embedded manifolds,
/// angle coordinates in [0, 2*pi) for chart-represented ones.
struct Point {
  Vec coords;
};

/// A tangent vector: base point plus components in the same coordinate
/// system as the point representation.
struct TangentVector {
  Point base;
  Vec components;
};

inline Vec vec2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

inline Vec vec3(double x, double y, double z) {
  Vec v(3);
  v << x, y, z;
  return v;
}

inline Vec vec4(double w, double x, double y, double z) {
  Vec v(4);
  v << w, x, y, z;
  return v;
}

}  // namespace geoplan
