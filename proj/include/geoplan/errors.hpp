#pragma once

#include <stdexcept>
#include <string>

#include "geoplan/types.hpp"

namespace geoplan {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point or tangent vector violates the manifold's defining constraint.
class ConstraintViolation : public Error {
 public:
  using Error::Error;
};

/// The queried pair lies within the cut-locus tolerance band; the geodesic
/// inversion is ambiguous and the caller must fall back to another section.
class CutLocusError : public Error {
 public:
  using Error::Error;
};

/// A geodesic on a manifold with boundary left the manifold.
class LeftManifoldError : public Error {
 public:
  using Error::Error;
};

/// The ODE integrator could not meet its accuracy target.
class IntegrationFailure : public Error {
 public:
  using Error::Error;
};

/// Shooting failed to converge from every start; carries the best residual.
class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& msg, double residual)
      : Error(msg), best_residual(residual) {}
  double best_residual;
};

/// No section of a planner accepted a pair; carries the offending pair.
class DispatchFailure : public Error {
 public:
  DispatchFailure(const std::string& msg, Vec p_coords, Vec q_coords)
      : Error(msg), p(std::move(p_coords)), q(std::move(q_coords)) {}
  Vec p;
  Vec q;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace geoplan
