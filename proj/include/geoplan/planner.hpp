#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "geoplan/geodesic.hpp"
#include "geoplan/manifold.hpp"

namespace geoplan {

/// Continuous path on [0, 1]; every returned point satisfies the manifold
/// constraint.  Sections hand these out so paths can be re-evaluated at
/// arbitrary parameters (not just on the sampling grid).
using PathFn = std::function<Point(double)>;

/// A path sampled at grid_size uniform parameters (grid_size = 2^k + 1).
/// Borrows the manifold; the owner must outlive the path.
struct DiscretePath {
  const ManifoldModel* manifold = nullptr;
  std::vector<Point> samples;

  int grid_size() const { return static_cast<int>(samples.size()); }
  const Point& start() const { return samples.front(); }
  const Point& end() const { return samples.back(); }
};

/// Sample a continuous path onto a grid, validating every sample against the
/// manifold constraint (tolerance 1e-9).
DiscretePath discretize(const ManifoldModel& m, const PathFn& path,
                        int grid_size = 257);

struct LengthEstimate {
  double value = 0.0;
  double error = 0.0;  // refinement-based estimate
};

/// Metric-sense length of a sampled path: the sum of pairwise distances of
/// consecutive samples (closed-form distance where available, ambient chords
/// with a Richardson correction on the ellipsoid).  Nondecreasing under grid
/// refinement.
LengthEstimate measure_length(const DiscretePath& path);
double path_length(const DiscretePath& path);

/// One domain of continuity with its local section.
struct LocalSection {
  int domain_id = 0;
  std::string name;
  std::function<bool(const Point&, const Point&)> membership;
  std::function<PathFn(const Point&, const Point&)> section;
};

struct PlannedPath {
  int domain_id = 0;
  PathFn path;
};

/// Ordered list of local sections with first-match dispatch.  The ordering
/// realizes disjoint effective domains G_i minus (G_0 u ... u G_{i-1}).
class MotionPlanner {
 public:
  /// Throws ConfigError when sections is empty (totality is unprovable).
  MotionPlanner(ManifoldModel manifold, std::string name,
                std::vector<LocalSection> sections);

  const ManifoldModel& manifold() const { return manifold_; }
  const std::string& name() const { return name_; }
  int section_count() const { return static_cast<int>(sections_.size()); }
  const LocalSection& section(int i) const { return sections_[i]; }

  /// Index of the first section accepting (p, q); DispatchFailure if none.
  int dispatch_domain(const Point& p, const Point& q) const;
  PlannedPath plan(const Point& p, const Point& q) const;
  DiscretePath plan_discrete(const Point& p, const Point& q,
                             int grid_size = 257) const;

 private:
  ManifoldModel manifold_;
  std::string name_;
  std::vector<LocalSection> sections_;
};

/// The geodesic planner on V = {(p, q) : q not in cut(p)}: the unique minimal
/// geodesic from p to q, as a continuous path.  Throws CutLocusError inside
/// the tolerance band.
PathFn sigma0_path(const ManifoldModel& m, const Point& p, const Point& q,
                   double cut_tolerance = 1e-6);
DiscretePath sigma0(const ManifoldModel& m, const Point& p, const Point& q,
                    int grid_size = 257, double cut_tolerance = 1e-6);

/// Prepend the geodesic section (domain 0, membership = outside the cut
/// band) to a total fallback planner.  Rejects an empty fallback.
MotionPlanner compose_efficient(const ManifoldModel& m,
                                const MotionPlanner& fallback,
                                double cut_tolerance = 1e-6);

/// Antipodal fallback planners on S^n.  Total: generic pairs take the minor
/// great-circle arc; exact antipodes follow an explicit unit tangent field
/// (n = 1 counterclockwise, n = 3 quaternionic p -> p*i), with a second
/// section on S^2 for the poles of the projected field (hairy ball).
MotionPlanner antipodal_planner_sphere(int n);

/// Total straight-line planner on T^n routing +pi at coordinate ties.
MotionPlanner torus_tiebreak_planner(int n);

/// The hemisphere pair: the 1-domain efficient planner (minor arcs with a
/// fixed tie-break on antipodal boundary pairs; discontinuous on that set)
/// and the 2-domain planner (minor arcs away from the antipodal boundary
/// set, boundary arcs in the fixed positive orientation on it).
std::pair<MotionPlanner, MotionPlanner> hemisphere_planners();

/// Planner registry used by config files: "sigma0+antipodal" (spheres),
/// "sigma0+torus-tiebreak" (tori), "hemisphere-1" / "hemisphere-2".
MotionPlanner make_planner(const ManifoldModel& m, const std::string& name,
                           double cut_tolerance = 1e-6);

using PairSampler = std::function<std::pair<Point, Point>(RngState&)>;

struct PropertyReport {
  int n_pairs = 0;
  double max_diagonal = 0.0;  // sup distance of plan(p, p) from constant
  double max_reversal = 0.0;  // sup d(plan(q,p)(t), plan(p,q)(1-t))
  double max_reeval = 0.0;    // sup deviation of the re-evaluation identity

  static constexpr double kDiagonalTol = 1e-8;
  static constexpr double kReversalTol = 1e-6;
  static constexpr double kReevalTol = 1e-5;

  bool diagonal_ok() const { return max_diagonal <= kDiagonalTol; }
  bool reversal_ok() const { return max_reversal <= kReversalTol; }
  bool reeval_ok() const { return max_reeval <= kReevalTol; }
  bool all_ok() const { return diagonal_ok() && reversal_ok() && reeval_ok(); }
};

/// Check the three desirable properties over random pairs: constant output
/// on the diagonal, reversal symmetry, and the re-evaluation identity
/// plan(plan(p,q)(t0), q)(t) = plan(p,q)(t0 + (1-t0) t).  Deviations are
/// reported, never thrown.  The default sampler draws uniform pairs outside
/// the cut band; pass a custom sampler to probe specific domains.
PropertyReport check_properties(const ManifoldModel& m,
                                const MotionPlanner& planner, int n_pairs,
                                std::uint64_t seed,
                                const PairSampler& sampler = nullptr);

}  // namespace geoplan
