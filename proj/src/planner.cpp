#include "geoplan/planner.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <utility>

#include "arc_util.hpp"

namespace geoplan {

namespace {

constexpr double kSampleTol = 1e-9;  // DiscretePath constraint tolerance
constexpr double kTieTol = 1e-6;     // torus + direction tie band
constexpr double kPoleTol = 1e-6;    // S^2 projected-field degeneracy band

bool power_of_two(int x) { return x > 0 && (x & (x - 1)) == 0; }

/// Distance used for sup-metric comparisons of nearby points: closed form
/// where available, ambient chord otherwise (the two agree to third order,
/// which is far below every comparison tolerance).
double comparison_distance(const ManifoldModel& m, const Point& a,
                           const Point& b) {
  if (const auto d = m.closed_form_distance(a, b)) return *d;
  return (a.coords - b.coords).norm();
}

/// Great-circle arc of total angle `angle` from p in unit direction u.
PathFn make_arc(Vec p, Vec u, double angle) {
  return [p = std::move(p), u = std::move(u), angle](double t) {
    return Point{arc::position(p, u, t * angle)};
  };
}

PathFn make_constant(Point p) {
  return [p = std::move(p)](double) { return p; };
}

/// Minor great-circle arc p -> q; when q is the exact antipode the direction
/// is taken from `tie_field` (must return a unit tangent at p).
PathFn arc_to(const Point& p, const Point& q,
              const std::function<Vec(const Vec&)>& tie_field) {
  const double theta = arc::sphere_angle(p.coords, q.coords);
  if (const auto u = arc::unit_toward(p.coords, q.coords)) {
    if (theta == 0.0) return make_constant(p);
    return make_arc(p.coords, *u, theta);
  }
  // unit_toward degenerates at both ends of the angle range: coincident
  // points stay put, antipodal ones take the tie-break arc.
  if (theta < kPi / 2.0) return make_constant(p);
  return make_arc(p.coords, tie_field(p.coords), kPi);
}

/// Straight chart segment from p by displacement delta, reduced mod 2*pi.
PathFn make_line(const ManifoldModel& m, Vec p, Vec delta) {
  return [m, p = std::move(p), delta = std::move(delta)](double t) {
    return m.project(p + t * delta);
  };
}

}  // namespace

// ---------------------------------------------------------------------------
// paths

DiscretePath discretize(const ManifoldModel& m, const PathFn& path,
                        int grid_size) {
  if (grid_size < 65 || !power_of_two(grid_size - 1)) {
    throw ConfigError("grid_size must be 2^k + 1 with k >= 6");
  }
  DiscretePath out;
  out.manifold = &m;
  out.samples.reserve(grid_size);
  for (int i = 0; i < grid_size; ++i) {
    Point s = path(static_cast<double>(i) / (grid_size - 1));
    if (m.constraint_residual(s) > kSampleTol) {
      throw ConstraintViolation("path sample off the manifold (residual " +
                                std::to_string(m.constraint_residual(s)) +
                                ")");
    }
    out.samples.push_back(std::move(s));
  }
  return out;
}

LengthEstimate measure_length(const DiscretePath& path) {
  const ManifoldModel& m = *path.manifold;
  const int n = path.grid_size();
  const bool closed_form =
      m.closed_form_distance(path.samples[0], path.samples[0]).has_value();
  auto seg = [&](const Point& a, const Point& b) {
    if (closed_form) return *m.closed_form_distance(a, b);
    return (a.coords - b.coords).norm();
  };
  double full = 0.0, half = 0.0;
  for (int i = 0; i + 1 < n; ++i) full += seg(path.samples[i], path.samples[i + 1]);
  for (int i = 0; i + 2 < n; i += 2) half += seg(path.samples[i], path.samples[i + 2]);

  LengthEstimate est;
  if (closed_form) {
    // Sums of true distances: the full grid is already the better partition.
    est.value = full;
    est.error = std::max(0.0, full - half) / 3.0;
  } else {
    // Chord sums underestimate by O(h^2); Richardson-extrapolate.
    est.value = full + (full - half) / 3.0;
    est.error = std::abs(full - half) / 3.0;
  }
  return est;
}

double path_length(const DiscretePath& path) {
  return measure_length(path).value;
}

// ---------------------------------------------------------------------------
// MotionPlanner

MotionPlanner::MotionPlanner(ManifoldModel manifold, std::string name,
                             std::vector<LocalSection> sections)
    : manifold_(std::move(manifold)),
      name_(std::move(name)),
      sections_(std::move(sections)) {
  if (sections_.empty()) {
    throw ConfigError("planner \"" + name_ +
                      "\" has no sections; totality is unprovable");
  }
  for (std::size_t i = 0; i < sections_.size(); ++i) {
    sections_[i].domain_id = static_cast<int>(i);
  }
}

int MotionPlanner::dispatch_domain(const Point& p, const Point& q) const {
  for (const LocalSection& s : sections_) {
    if (s.membership(p, q)) return s.domain_id;
  }
  throw DispatchFailure("no section of \"" + name_ + "\" accepts the pair",
                        p.coords, q.coords);
}

PlannedPath MotionPlanner::plan(const Point& p, const Point& q) const {
  manifold_.validate(p);
  manifold_.validate(q);
  const int d = dispatch_domain(p, q);
  return {d, sections_[d].section(p, q)};
}

DiscretePath MotionPlanner::plan_discrete(const Point& p, const Point& q,
                                          int grid_size) const {
  return discretize(manifold_, plan(p, q).path, grid_size);
}

// ---------------------------------------------------------------------------
// sigma0

PathFn sigma0_path(const ManifoldModel& m, const Point& p, const Point& q,
                   double cut_tolerance) {
  LogOptions opts;
  opts.cut_tolerance = cut_tolerance;
  const TangentVector v = log_map(m, p, q, opts);
  const double speed = v.components.norm();
  switch (m.kind()) {
    case ManifoldKind::Sphere:
    case ManifoldKind::Hemisphere: {
      if (speed == 0.0) return make_constant(p);
      return make_arc(p.coords, Vec(v.components / speed), speed);
    }
    case ManifoldKind::FlatTorus:
      return make_line(m, p.coords, v.components);
    case ManifoldKind::Ellipsoid: {
      auto sol =
          std::make_shared<GeodesicSolution>(solve_geodesic(m, v, 256));
      return [sol](double t) { return sol->position(t); };
    }
  }
  throw Error("unreachable");
}

DiscretePath sigma0(const ManifoldModel& m, const Point& p, const Point& q,
                    int grid_size, double cut_tolerance) {
  return discretize(m, sigma0_path(m, p, q, cut_tolerance), grid_size);
}

// ---------------------------------------------------------------------------
// composition

MotionPlanner compose_efficient(const ManifoldModel& m,
                                const MotionPlanner& fallback,
                                double cut_tolerance) {
  if (fallback.manifold().to_config() != m.to_config()) {
    throw ConfigError("fallback planner built for a different manifold");
  }
  std::vector<LocalSection> sections;
  LocalSection geo;
  geo.name = "sigma0";
  geo.membership = [m, cut_tolerance](const Point& p, const Point& q) {
    return !in_cut_locus(m, p, q, cut_tolerance);
  };
  geo.section = [m, cut_tolerance](const Point& p, const Point& q) {
    return sigma0_path(m, p, q, cut_tolerance);
  };
  sections.push_back(std::move(geo));
  for (int i = 0; i < fallback.section_count(); ++i) {
    sections.push_back(fallback.section(i));
  }
  return MotionPlanner(m, "sigma0+" + fallback.name(), std::move(sections));
}

// ---------------------------------------------------------------------------
// concrete fallback planners

MotionPlanner antipodal_planner_sphere(int n) {
  const ManifoldModel m = ManifoldModel::sphere(n);
  std::vector<LocalSection> sections;

  auto always = [](const Point&, const Point&) { return true; };

  if (n == 1) {
    // Counterclockwise rotation from p to q; antipodes get the upper arc.
    LocalSection s;
    s.name = "ccw";
    s.membership = always;
    s.section = [](const Point& p, const Point& q) {
      const double angle = wrap_two_pi(std::atan2(q.coords[1], q.coords[0]) -
                                       std::atan2(p.coords[1], p.coords[0]));
      const Vec u = vec2(-p.coords[1], p.coords[0]);  // ccw unit tangent
      return make_arc(p.coords, u, angle);
    };
    sections.push_back(std::move(s));
    return MotionPlanner(m, "antipodal", std::move(sections));
  }

  if (n == 2) {
    // Projected-field section, valid away from the poles of e = (0,0,1).
    auto field_e = [](const Vec& p) {
      Vec a = vec3(0, 0, 1) - p[2] * p;
      return Vec(a / a.norm());
    };
    LocalSection s1;
    s1.name = "projected-field";
    s1.membership = [](const Point& p, const Point& q) {
      const bool antipodal = !arc::unit_toward(p.coords, q.coords).has_value();
      const double sin_pole = std::hypot(p.coords[0], p.coords[1]);
      return !(antipodal && sin_pole < kPoleTol);
    };
    s1.section = [field_e](const Point& p, const Point& q) {
      return arc_to(p, q, field_e);
    };
    sections.push_back(std::move(s1));

    // Hairy-ball degeneracy at p = +-e: a fixed semicircle via (1,0,0).
    auto field_x = [](const Vec& p) {
      Vec a = vec3(1, 0, 0) - p[0] * p;
      return Vec(a / a.norm());
    };
    LocalSection s2;
    s2.name = "pole-arc";
    s2.membership = always;
    s2.section = [field_x](const Point& p, const Point& q) {
      return arc_to(p, q, field_x);
    };
    sections.push_back(std::move(s2));
    return MotionPlanner(m, "antipodal", std::move(sections));
  }

  // n == 3: the quaternionic field p -> p*i never vanishes.
  LocalSection s;
  s.name = "quaternion-field";
  s.membership = always;
  s.section = [](const Point& p, const Point& q) {
    auto field = [](const Vec& w) {
      return vec4(-w[1], w[0], w[3], -w[2]);  // (w,x,y,z) * i
    };
    return arc_to(p, q, field);
  };
  sections.push_back(std::move(s));
  return MotionPlanner(m, "antipodal", std::move(sections));
}

MotionPlanner torus_tiebreak_planner(int n) {
  const ManifoldModel m = ManifoldModel::flat_torus(n);
  LocalSection s;
  s.name = "tiebreak";
  s.membership = [](const Point&, const Point&) { return true; };
  s.section = [m](const Point& p, const Point& q) {
    Vec delta(m.dim());
    for (int i = 0; i < m.dim(); ++i) {
      double d = wrap_pi(q.coords[i] - p.coords[i]);
      // Ties |d| ~= pi are routed in the + direction; the endpoint is
      // unchanged because the shift is a full period.
      if (d <= -(kPi - kTieTol)) d += kTwoPi;
      delta[i] = d;
    }
    return make_line(m, p.coords, delta);
  };
  std::vector<LocalSection> sections;
  sections.push_back(std::move(s));
  return MotionPlanner(m, "torus-tiebreak", std::move(sections));
}

std::pair<MotionPlanner, MotionPlanner> hemisphere_planners() {
  const ManifoldModel m = ManifoldModel::hemisphere();

  // Exact antipodal pairs only occur on the boundary circle (both z = 0);
  // the fixed positive orientation routes counterclockwise along it.
  auto boundary_ccw = [](const Vec& p) {
    const double r = std::hypot(p[0], p[1]);
    return vec3(-p[1] / r, p[0] / r, 0.0);
  };

  LocalSection one;
  one.name = "tie-break";
  one.membership = [](const Point&, const Point&) { return true; };
  one.section = [boundary_ccw](const Point& p, const Point& q) {
    return arc_to(p, q, boundary_ccw);
  };
  std::vector<LocalSection> single;
  single.push_back(one);
  MotionPlanner planner1(m, "hemisphere-1", std::move(single));

  LocalSection interior;
  interior.name = "interior";
  interior.membership = [m](const Point& p, const Point& q) {
    return !in_cut_locus(m, p, q, 1e-6);
  };
  interior.section = [boundary_ccw](const Point& p, const Point& q) {
    return arc_to(p, q, boundary_ccw);  // never antipodal here
  };
  LocalSection boundary;
  boundary.name = "boundary-orientation";
  boundary.membership = [](const Point&, const Point&) { return true; };
  boundary.section = [boundary_ccw](const Point& p, const Point& q) {
    return arc_to(p, q, boundary_ccw);
  };
  std::vector<LocalSection> both;
  both.push_back(std::move(interior));
  both.push_back(std::move(boundary));
  MotionPlanner planner2(m, "hemisphere-2", std::move(both));

  return {std::move(planner1), std::move(planner2)};
}

MotionPlanner make_planner(const ManifoldModel& m, const std::string& name,
                           double cut_tolerance) {
  if (name == "sigma0+antipodal") {
    if (m.kind() != ManifoldKind::Sphere) {
      throw ConfigError("planner \"" + name + "\" requires a sphere");
    }
    return compose_efficient(m, antipodal_planner_sphere(m.dim()),
                             cut_tolerance);
  }
  if (name == "sigma0+torus-tiebreak") {
    if (m.kind() != ManifoldKind::FlatTorus) {
      throw ConfigError("planner \"" + name + "\" requires a flat torus");
    }
    return compose_efficient(m, torus_tiebreak_planner(m.dim()),
                             cut_tolerance);
  }
  if (name == "hemisphere-1" || name == "hemisphere-2") {
    if (m.kind() != ManifoldKind::Hemisphere) {
      throw ConfigError("planner \"" + name + "\" requires the hemisphere");
    }
    auto pair = hemisphere_planners();
    return name == "hemisphere-1" ? std::move(pair.first)
                                  : std::move(pair.second);
  }
  throw ConfigError("unknown planner \"" + name + "\"");
}

// ---------------------------------------------------------------------------
// property checks

PropertyReport check_properties(const ManifoldModel& m,
                                const MotionPlanner& planner, int n_pairs,
                                std::uint64_t seed,
                                const PairSampler& sampler) {
  RngState rng = make_stream(seed, /*stream=*/2);
  auto draw_pair = [&]() -> std::pair<Point, Point> {
    if (sampler) return sampler(rng);
    for (int tries = 0; tries < 1000; ++tries) {
      Point p = m.sample_point(rng);
      Point q = m.sample_point(rng);
      if (!in_cut_locus(m, p, q, 1e-6)) return {std::move(p), std::move(q)};
    }
    throw Error("pair sampler starved outside the cut band");
  };

  constexpr int kGrid = 257;
  PropertyReport report;
  report.n_pairs = n_pairs;
  for (int k = 0; k < n_pairs; ++k) {
    const auto [p, q] = draw_pair();

    // (a) constant output on the diagonal.
    const PathFn diag = planner.plan(p, p).path;
    for (int i = 0; i < kGrid; ++i) {
      const double t = static_cast<double>(i) / (kGrid - 1);
      report.max_diagonal = std::max(
          report.max_diagonal, comparison_distance(m, diag(t), p));
    }

    // (b) reversal symmetry.
    const PathFn fwd = planner.plan(p, q).path;
    const PathFn rev = planner.plan(q, p).path;
    for (int i = 0; i < kGrid; ++i) {
      const double t = static_cast<double>(i) / (kGrid - 1);
      report.max_reversal = std::max(
          report.max_reversal, comparison_distance(m, rev(t), fwd(1.0 - t)));
    }

    // (c) re-evaluation identity from a random interior parameter.
    double t0;
    do {
      t0 = uniform01(rng);
    } while (t0 >= 1.0);
    const Point mid = fwd(t0);
    const PathFn rest = planner.plan(mid, q).path;
    for (int i = 0; i < kGrid; ++i) {
      const double t = static_cast<double>(i) / (kGrid - 1);
      report.max_reeval =
          std::max(report.max_reeval,
                   comparison_distance(m, rest(t), fwd(t0 + (1.0 - t0) * t)));
    }
  }
  return report;
}

}  // namespace geoplan
