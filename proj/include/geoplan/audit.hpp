#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "geoplan/planner.hpp"

namespace geoplan {

struct EstimateResult {
  double mean = 0.0;
  double standard_error = 0.0;
};

/// Monte-Carlo audit of one planner on one manifold.  All estimates are
/// deterministic functions of (seed, n_pairs, grid_size, planner, manifold):
/// pairs are drawn from per-block generator streams and blocks are reduced
/// in index order, so the result does not depend on the thread count.
struct AuditReport {
  std::string planner_name;
  nlohmann::json manifold;
  std::int64_t n_pairs = 0;
  int grid_size = 0;
  std::uint64_t seed = 0;
  double cut_tolerance = 0.0;

  double volume = 0.0;  // vol(X); pair measure is vol(X)^2

  double mean_length = 0.0;
  double se_length = 0.0;
  double mean_distance = 0.0;
  double se_distance = 0.0;
  /// Paired estimator: mean and standard error of per-pair length - distance.
  double defect = 0.0;
  double se_defect = 0.0;
  double pointwise_defect_min = 0.0;
  double pointwise_defect_max = 0.0;
  /// Largest length - distance among pairs dispatched to domain 0.
  double max_defect_domain0 = 0.0;

  std::map<int, std::int64_t> domain_histogram;
  std::vector<std::pair<double, double>> cutband_curve;  // (epsilon, fraction)

  nlohmann::ordered_json to_json() const;
};

struct AuditOptions {
  std::int64_t n_pairs = 100000;
  int grid_size = 257;
  std::uint64_t seed = 0;
  double cut_tolerance = 1e-6;
  int threads = 1;  // 0 = available parallelism
  std::vector<double> cutband_epsilons = {0.1, 0.05, 0.025, 0.0125};
};

/// Serialize with every float at 17 significant digits (exact round trips,
/// byte-stable output for regression tests).
std::string dump_json_g17(const nlohmann::ordered_json& j, int indent = 2);

/// Sample mean and standard error of d(p, q) over volume-uniform pairs.
/// The unnormalized integral over X x X is mean * vol(X)^2.
EstimateResult estimate_distance_integral(const ManifoldModel& m,
                                          std::int64_t n_pairs,
                                          std::uint64_t seed, int threads = 1);

struct PlannerLengthEstimate {
  EstimateResult length;
  std::map<int, std::int64_t> domain_histogram;
};

/// Sample mean of path_length(dispatch(p, q)) over the same pair stream as
/// estimate_distance_integral at the same seed (paired estimator).
PlannerLengthEstimate estimate_planner_length(const ManifoldModel& m,
                                              const MotionPlanner& planner,
                                              std::int64_t n_pairs,
                                              int grid_size,
                                              std::uint64_t seed,
                                              int threads = 1);

/// Fraction of uniform pairs inside the cut band at each epsilon; the curve
/// trends to zero (the cut locus has measure zero).  epsilon = 0 is allowed
/// and yields fraction 0 almost surely.
std::vector<std::pair<double, double>> cutband_measure(
    const ManifoldModel& m, const std::vector<double>& epsilons,
    std::int64_t n_pairs, std::uint64_t seed, int threads = 1);

/// One pass over the paired pair stream: lengths, distances, defect with
/// standard errors, the domain histogram and the cut-band curve.
AuditReport run_audit(const ManifoldModel& m, const MotionPlanner& planner,
                      const AuditOptions& options);

/// A near-discontinuity certificate: two input pairs within delta whose
/// output paths are far apart in the sup metric.
struct Witness {
  Point p, q;
  Point p_alt, q_alt;
  double input_separation = 0.0;
  double output_separation = 0.0;
};

/// Searches pair space (random probes plus straddles of the cut/tie loci)
/// for witnesses with input separation <= delta and output sup-distance
/// >= 0.5.  An optional restriction predicate limits the search region; it
/// must accept both pairs of a candidate.  Returns at most 64 witnesses.
std::vector<Witness> discontinuity_scan(
    const ManifoldModel& m, const MotionPlanner& planner,
    std::int64_t n_probe_pairs, double delta, std::uint64_t seed,
    const std::function<bool(const Point&, const Point&)>& restrict = nullptr);

}  // namespace geoplan
