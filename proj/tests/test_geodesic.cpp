#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include <Eigen/Dense>

#include "geoplan/errors.hpp"
#include "geoplan/geodesic.hpp"
#include "geoplan/manifold.hpp"
#include "geoplan/numeric.hpp"

using namespace geoplan;

namespace {

Point pt(std::initializer_list<double> xs) {
  Point p;
  p.coords = Vec(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) p.coords[i++] = x;
  return p;
}

TangentVector tangent(const Point& p, std::initializer_list<double> xs) {
  TangentVector v;
  v.base = p;
  v.components = Vec(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v.components[i++] = x;
  return v;
}

/// Length of a geodesic solution by summing sample-to-sample distances in the
/// ambient/chart metric; an oracle independent of the solver internals.
double solution_length(const ManifoldModel& m, const GeodesicSolution& sol) {
  double len = 0.0;
  for (std::size_t i = 1; i < sol.samples.size(); ++i) {
    const Point& a = sol.samples[i - 1].point;
    const Point& b = sol.samples[i].point;
    if (auto d = m.closed_form_distance(a, b)) {
      len += *d;
    } else {
      len += (a.coords - b.coords).norm();
    }
  }
  return len;
}

/// Largest parameter T such that the spherical ray cos(t) p + sin(t) u keeps
/// z >= 0 on [0, T]; the domain of exp on the hemisphere.
double hemisphere_exit_time(const Point& p, const Vec& u) {
  const double phi = std::atan2(u[2], p.coords[2]);
  return phi + kPi / 2.0;
}

}  // namespace

TEST_CASE("exp_map frozen examples") {
  auto s2 = ManifoldModel::sphere(2);
  const Point p = pt({1, 0, 0});
  const Point q = exp_map(s2, tangent(p, {0, kPi / 2.0, 0}), 1.0);
  CHECK((q.coords - pt({0, 1, 0}).coords).norm() <= 1e-14);

  // zero vector: constant geodesic at any parameter
  for (double t : {0.0, 0.25, 1.0, 7.5}) {
    const Point r = exp_map(s2, tangent(p, {0, 0, 0}), t);
    CHECK((r.coords - p.coords).norm() == 0.0);
  }

  auto t2 = ManifoldModel::flat_torus(2);
  const Point base = pt({0, 0});
  const Point w = exp_map(t2, tangent(base, {3.0 * kPi, 0}), 1.0);
  CHECK(std::abs(wrap_pi(w.coords[0] - kPi)) <= 1e-12);
  CHECK(std::abs(w.coords[1]) <= 1e-12);
}

TEST_CASE("log_map frozen examples") {
  auto s2 = ManifoldModel::sphere(2);
  const Point p = pt({1, 0, 0});
  const TangentVector v = log_map(s2, p, pt({0, 0, 1}));
  CHECK((v.components - pt({0, 0, kPi / 2.0}).coords).norm() <= 1e-14);
  CHECK(std::abs(v.components.norm() - kPi / 2.0) <= 1e-14);

  const TangentVector zero = log_map(s2, p, p);
  CHECK(zero.components.norm() == 0.0);

  CHECK_THROWS_AS(log_map(s2, p, pt({-1, 0, 0})), CutLocusError);
}

TEST_CASE("solve_geodesic: grid contract, drift, distance realization") {
  auto s2 = ManifoldModel::sphere(2);
  RngState rng = make_stream(31, 0);
  for (int i = 0; i < 50; ++i) {
    const Point p = s2.sample_point(rng);
    const Vec u = s2.sample_unit_tangent(p, rng);
    const double t = uniform(rng, 0.05, 0.9 * kPi);
    TangentVector v{p, t * u};
    const GeodesicSolution sol = solve_geodesic(s2, v);
    CHECK(sol.grid_size >= 64);
    CHECK(static_cast<int>(sol.samples.size()) == sol.grid_size + 1);
    CHECK(sol.speed_drift <= 1e-6);
    CHECK((sol.position(0.0).coords - p.coords).norm() <= 1e-12);
    CHECK((sol.position(1.0).coords - sol.endpoint().coords).norm() <= 1e-12);
    CHECK(std::abs(solution_length(s2, sol) - t) <= 1e-6);
    CHECK(std::abs(*s2.closed_form_distance(p, sol.endpoint()) - t) <= 1e-9);
    // velocity stays metric-unit up to drift
    CHECK(std::abs(s2.norm(sol.position(0.37), sol.velocity(0.37)) - t) <= 1e-6 * std::max(1.0, t));
  }

  CHECK_THROWS_AS(solve_geodesic(s2, tangent(pt({1, 0, 0}), {0, 1, 0}), 32),
                  Error);

  auto ell = ManifoldModel::ellipsoid(1.2, 1.0, 0.8);
  for (int i = 0; i < 10; ++i) {
    const Point p = ell.sample_point(rng);
    const Vec u = ell.sample_unit_tangent(p, rng);
    TangentVector v{p, uniform(rng, 0.1, 2.0) * u};
    const GeodesicSolution sol = solve_geodesic(ell, v);
    CHECK(sol.speed_drift <= 1e-6);
    CHECK(ell.constraint_residual(sol.endpoint()) <= 1e-9);
    CHECK(std::abs(solution_length(ell, sol) - v.components.norm()) <=
          1e-5 * std::max(1.0, v.components.norm()));
  }
}

TEST_CASE("cut_time frozen examples") {
  auto s2 = ManifoldModel::sphere(2);
  RngState rng = make_stream(32, 0);
  for (int i = 0; i < 20; ++i) {
    const Point p = s2.sample_point(rng);
    const Vec u = s2.sample_unit_tangent(p, rng);
    const CutProbe probe = cut_time(s2, {p, u});
    CHECK(probe.cut_time == kPi);
    CHECK(probe.conjugate_time == kPi);
    CHECK(probe.detection == CutDetection::Conjugate);
  }

  auto t2 = ManifoldModel::flat_torus(2);
  const Point o = pt({0, 0});
  CHECK(std::abs(cut_time(t2, tangent(o, {1, 0})).cut_time - kPi) <= 1e-12);
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(cut_time(t2, tangent(o, {r, r})).cut_time -
                 kPi * std::sqrt(2.0)) <= 1e-12);

  auto round = ManifoldModel::ellipsoid(1, 1, 1);
  for (int i = 0; i < 5; ++i) {
    const Point p = round.sample_point(rng);
    const Vec u = round.sample_unit_tangent(p, rng);
    const CutProbe probe = cut_time(round, {p, u});
    CHECK(std::abs(probe.cut_time - kPi) <= 1e-4);
    CHECK(probe.cut_time <= probe.conjugate_time + 1e-4);
  }

  auto ell = ManifoldModel::ellipsoid(1.2, 1.0, 0.8);
  for (int i = 0; i < 5; ++i) {
    const Point p = ell.sample_point(rng);
    const Vec u = ell.sample_unit_tangent(p, rng);
    const CutProbe probe = cut_time(ell, {p, u});
    CHECK(probe.cut_time > 0.0);
    CHECK(probe.cut_time <= probe.conjugate_time + 1e-4);
  }

  // non-unit directions are rejected
  CHECK_THROWS_AS(cut_time(s2, tangent(pt({1, 0, 0}), {0, 2, 0})),
                  ConstraintViolation);
}

TEST_CASE("in_cut_locus frozen examples") {
  auto s2 = ManifoldModel::sphere(2);
  RngState rng = make_stream(33, 0);
  for (int i = 0; i < 20; ++i) {
    const Point p = s2.sample_point(rng);
    Point anti;
    anti.coords = -p.coords;
    CHECK(in_cut_locus(s2, p, anti, 1e-9));
    CHECK(in_cut_locus(s2, p, anti, 1e-2));
    CHECK(!in_cut_locus(s2, p, p, 1e-6));
  }
  auto t2 = ManifoldModel::flat_torus(2);
  CHECK(in_cut_locus(t2, pt({0, 0}), pt({kPi, 1.0}), 1e-6));
  CHECK(!in_cut_locus(t2, pt({0, 0}), pt({1.0, 1.0}), 1e-6));
}

TEST_CASE("round trips: log after exp recovers v below the cut time") {
  RngState rng = make_stream(34, 0);

  auto trip = [&rng](const ManifoldModel& m, int n, double tol) {
    double worst = 0.0;
    int done = 0;
    while (done < n) {
      const Point p = m.sample_point(rng);
      const Vec u = m.sample_unit_tangent(p, rng);
      double t_max;
      if (m.kind() == ManifoldKind::Ellipsoid) {
        // cut_time >= pi / sqrt(K_max) = pi * b * c / a for axes a >= b >= c,
        // so 1.8 < 0.9 * cut_time on the (1.2, 1.0, 0.8) ellipsoid.
        t_max = 1.8;
      } else {
        t_max = 0.9 * cut_time(m, {p, u}).cut_time;
      }
      if (m.kind() == ManifoldKind::Hemisphere)
        t_max = std::min(t_max, 0.9 * hemisphere_exit_time(p, u));
      if (t_max < 1e-3) continue;
      const double t = uniform(rng, 0.0, t_max);
      TangentVector v{p, t * u};
      const Point q = exp_map(m, v, 1.0);
      const TangentVector back = log_map(m, p, q);
      worst = std::max(worst, (back.components - v.components).norm());
      ++done;
    }
    CHECK(worst <= tol);
    return worst;
  };

  trip(ManifoldModel::sphere(2), 1000, 1e-6);
  trip(ManifoldModel::flat_torus(2), 1000, 1e-6);
  trip(ManifoldModel::hemisphere(), 1000, 1e-6);
  trip(ManifoldModel::ellipsoid(1.2, 1.0, 0.8), 200, 1e-6);
}

TEST_CASE("degenerate ellipsoid reproduces sphere logs within 1e-5") {
  auto round = ManifoldModel::ellipsoid(1, 1, 1);
  auto s2 = ManifoldModel::sphere(2);
  RngState rng = make_stream(35, 0);
  double worst = 0.0;
  int done = 0;
  while (done < 300) {
    const Point p = s2.sample_point(rng);
    const Point q = s2.sample_point(rng);
    if (*s2.closed_form_distance(p, q) > kPi - 0.05) continue;
    const TangentVector vs = log_map(s2, p, q);
    const TangentVector ve = log_map(round, p, q);
    worst = std::max(worst, (vs.components - ve.components).norm());
    ++done;
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("distance agrees with closed forms and is symmetric on the ellipsoid") {
  auto s2 = ManifoldModel::sphere(2);
  RngState rng = make_stream(36, 0);
  for (int i = 0; i < 100; ++i) {
    const Point p = s2.sample_point(rng);
    const Point q = s2.sample_point(rng);
    CHECK(std::abs(distance(s2, p, q) - *s2.closed_form_distance(p, q)) == 0.0);
  }
  auto ell = ManifoldModel::ellipsoid(1.2, 1.0, 0.8);
  for (int i = 0; i < 20; ++i) {
    const Point p = ell.sample_point(rng);
    const Point q = ell.sample_point(rng);
    const double pq = distance(ell, p, q);
    const double qp = distance(ell, q, p);
    CHECK(pq >= 0.0);
    CHECK(std::abs(pq - qp) <= 1e-7 * std::max(1.0, pq));
  }
}

TEST_CASE("hemisphere boundary behaviour of exp and log") {
  auto hemi = ManifoldModel::hemisphere();
  const Point p = pt({1, 0, 0});

  // along the boundary circle: fine at any arc length below pi
  const Point q = exp_map(hemi, tangent(p, {0, kPi / 2.0, 0}), 1.0);
  CHECK((q.coords - pt({0, 1, 0}).coords).norm() <= 1e-14);

  // straight down leaves the manifold immediately
  CHECK_THROWS_AS(exp_map(hemi, tangent(p, {0, 0, -1.0}), 1.0),
                  LeftManifoldError);

  // interior arcs that would dip below the equator are rejected too
  const Point high = pt({0, 0, 1});
  CHECK_THROWS_AS(exp_map(hemi, tangent(high, {kPi * 0.9, 0, 0}), 1.0),
                  LeftManifoldError);

  const TangentVector v = log_map(hemi, p, pt({0, 1, 0}));
  CHECK((v.components - pt({0, kPi / 2.0, 0}).coords).norm() <= 1e-14);
}
