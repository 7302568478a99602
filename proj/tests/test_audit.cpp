#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "geoplan/audit.hpp"
#include "geoplan/errors.hpp"
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

/// Negative control: traverses the minimal geodesic forward, back and
/// forward again, so every pair costs 3 d(p, q) instead of d(p, q).
MotionPlanner wasteful_planner(const ManifoldModel& m) {
  LocalSection sec;
  sec.name = "three-trips";
  sec.membership = [](const Point&, const Point&) { return true; };
  sec.section = [m](const Point& p, const Point& q) -> PathFn {
    const PathFn sigma = sigma0_path(m, p, q);
    return [sigma](double t) {
      if (t <= 1.0 / 3.0) return sigma(3.0 * t);
      if (t <= 2.0 / 3.0) return sigma(2.0 - 3.0 * t);
      return sigma(3.0 * t - 2.0);
    };
  };
  return MotionPlanner(m, "three-trips", {sec});
}

}  // namespace

TEST_CASE("distance integral oracles: pi/2 means and unnormalized values") {
  auto s1 = ManifoldModel::sphere(1);
  const EstimateResult rs1 = estimate_distance_integral(s1, 200000, 101);
  CHECK(std::abs(rs1.mean - kPi / 2.0) <= 3.0 * rs1.standard_error);
  // unnormalized integral over X x X: mean * vol^2 = 2 pi^3
  const double unnorm = rs1.mean * s1.volume() * s1.volume();
  CHECK(std::abs(unnorm - 2.0 * kPi * kPi * kPi) <=
        3.0 * rs1.standard_error * s1.volume() * s1.volume());

  auto t1 = ManifoldModel::flat_torus(1);
  const EstimateResult rt1 = estimate_distance_integral(t1, 200000, 102);
  CHECK(std::abs(rt1.mean - kPi / 2.0) <= 3.0 * rt1.standard_error);

  auto s2 = ManifoldModel::sphere(2);
  const EstimateResult rs2 = estimate_distance_integral(s2, 200000, 103);
  CHECK(std::abs(rs2.mean - kPi / 2.0) <= 3.0 * rs2.standard_error);
  CHECK(rs2.standard_error > 0.0);
  CHECK(rs2.standard_error < 0.01);
}

TEST_CASE("paired audit on the composed sphere planner") {
  auto s2 = ManifoldModel::sphere(2);
  const MotionPlanner planner = make_planner(s2, "sigma0+antipodal", 1e-6);
  AuditOptions opt;
  opt.n_pairs = 20000;
  opt.seed = 7;
  opt.threads = 2;
  const AuditReport rep = run_audit(s2, planner, opt);

  CHECK(std::abs(rep.defect) <= 1e-4);
  CHECK(std::abs(rep.defect) <= 3.0 * rep.se_defect + 1e-12);
  CHECK(rep.pointwise_defect_min >= -1e-7);
  CHECK(rep.max_defect_domain0 <= 1e-5);
  CHECK(rep.mean_length >= rep.mean_distance - 3.0 * rep.se_defect - 1e-12);

  std::int64_t total = 0;
  for (const auto& [domain, count] : rep.domain_histogram) total += count;
  CHECK(total == opt.n_pairs);
  CHECK(rep.domain_histogram.at(0) >= opt.n_pairs - 20);

  // paired streams: the audit's distance column reproduces the standalone
  // estimator bit for bit
  const EstimateResult alone =
      estimate_distance_integral(s2, opt.n_pairs, opt.seed);
  CHECK(rep.mean_distance == alone.mean);
  CHECK(rep.se_distance == alone.standard_error);
}

TEST_CASE("wasteful planner shows up as a large defect") {
  auto s2 = ManifoldModel::sphere(2);
  const MotionPlanner bad = wasteful_planner(s2);
  AuditOptions opt;
  opt.n_pairs = 5000;
  opt.seed = 8;
  const AuditReport rep = run_audit(s2, bad, opt);
  // each path costs 3 d, so the defect sits at 2 * mean_distance; the grid
  // cuts a corner at each of the two reversal kinks, ~3 d / 256 apiece
  CHECK(rep.defect > 10.0 * rep.se_defect);
  CHECK(std::abs(rep.defect - 2.0 * rep.mean_distance) <= 0.05);
}

TEST_CASE("paths over the length sanity bound are rejected") {
  auto s2 = ManifoldModel::sphere(2);
  LocalSection sec;
  sec.name = "winding";
  sec.membership = [](const Point&, const Point&) { return true; };
  sec.section = [](const Point& p, const Point& q) -> PathFn {
    // six full extra revolutions along a great circle through p and q:
    // length theta + 12 pi regardless of the pair, over the sanity bound
    Vec u = q.coords - p.coords.dot(q.coords) * p.coords;
    if (u.norm() < 1e-9) {
      u = Vec(3);
      u << -p.coords[1], p.coords[0], 0.0;
    }
    u.normalize();
    const double theta = std::acos(std::clamp(p.coords.dot(q.coords), -1.0, 1.0));
    return [p, u, theta](double t) {
      const double a = (theta + 12.0 * kPi) * t;
      Point out;
      out.coords = std::cos(a) * p.coords + std::sin(a) * u;
      return out;
    };
  };
  const MotionPlanner bad(s2, "winding", {sec});
  CHECK_THROWS_AS(estimate_planner_length(s2, bad, 4096, 257, 9),
                  ConstraintViolation);
}

TEST_CASE("cutband curve: analytic sphere band, torus halving, edge cases") {
  auto s2 = ManifoldModel::sphere(2);
  const std::int64_t n = 500000;
  const auto sphere_curve =
      cutband_measure(s2, {0.1, 0.05, 0.025, 0.0125, 0.0}, n, 104, 2);
  for (std::size_t i = 0; i + 1 < sphere_curve.size(); ++i)
    CHECK(sphere_curve[i].second >= sphere_curve[i + 1].second);
  CHECK(sphere_curve.back().second == 0.0);  // epsilon = 0: measure zero
  for (std::size_t i = 0; i + 1 < sphere_curve.size(); ++i) {
    const auto [eps, frac] = sphere_curve[i];
    const double oracle = (1.0 - std::cos(eps)) / 2.0;
    const double se = std::sqrt(oracle * (1.0 - oracle) / static_cast<double>(n));
    CHECK(std::abs(frac - oracle) <= 3.0 * se + 1e-12);
  }
  // cap-area scaling: each halving of epsilon quarters the fraction
  const double r1 = sphere_curve[1].second / sphere_curve[0].second;
  const double r2 = sphere_curve[2].second / sphere_curve[1].second;
  CHECK(r1 >= 0.15);
  CHECK(r1 <= 0.35);
  CHECK(r2 >= 0.12);
  CHECK(r2 <= 0.40);

  auto t2 = ManifoldModel::flat_torus(2);
  const auto torus_curve = cutband_measure(t2, {0.1, 0.05, 0.025}, 200000, 105, 2);
  for (std::size_t i = 0; i + 1 < torus_curve.size(); ++i) {
    const double ratio = torus_curve[i + 1].second / torus_curve[i].second;
    CHECK(ratio >= 0.4);
    CHECK(ratio <= 0.6);
  }
  for (const auto& [eps, frac] : torus_curve) {
    const double oracle = 1.0 - std::pow(1.0 - eps / kPi, 2);
    const double se = std::sqrt(oracle * (1.0 - oracle) / 200000.0);
    CHECK(std::abs(frac - oracle) <= 3.0 * se);
  }

  const auto single = cutband_measure(s2, {0.2}, 1000, 106);
  CHECK(single.size() == 1);
  CHECK(single[0].first == 0.2);

  CHECK_THROWS_AS(cutband_measure(s2, {-0.1}, 1000, 1), ConfigError);
}

TEST_CASE("seed determinism and thread independence of reports") {
  auto t2 = ManifoldModel::flat_torus(2);
  const MotionPlanner planner = make_planner(t2, "sigma0+torus-tiebreak", 1e-6);
  AuditOptions opt;
  opt.n_pairs = 5000;  // exercises a partial trailing block
  opt.seed = 12;
  opt.threads = 1;
  const std::string a = dump_json_g17(run_audit(t2, planner, opt).to_json());
  opt.threads = 4;
  const std::string b = dump_json_g17(run_audit(t2, planner, opt).to_json());
  opt.threads = 3;
  const std::string c = dump_json_g17(run_audit(t2, planner, opt).to_json());
  CHECK(a == b);
  CHECK(a == c);

  opt.seed = 13;
  const std::string d = dump_json_g17(run_audit(t2, planner, opt).to_json());
  CHECK(a != d);
}

TEST_CASE("report serialization: schema, 17-digit round trips, histogram") {
  auto s2 = ManifoldModel::sphere(2);
  const MotionPlanner planner = make_planner(s2, "sigma0+antipodal", 1e-6);
  AuditOptions opt;
  opt.n_pairs = 2000;
  opt.seed = 14;
  const AuditReport rep = run_audit(s2, planner, opt);
  const nlohmann::ordered_json j = rep.to_json();

  CHECK(j.at("schema").get<int>() == 1);
  CHECK(j.at("planner").get<std::string>() == "sigma0+antipodal");
  CHECK(j.at("manifold").at("kind").get<std::string>() == "sphere");
  CHECK(j.at("n_pairs").get<std::int64_t>() == 2000);
  CHECK(j.at("grid_size").get<int>() == 257);
  CHECK(j.at("seed").get<std::uint64_t>() == 14);
  CHECK(j.at("cutband_curve").size() == 4);
  CHECK(j.at("unnormalized_distance_integral").get<double>() ==
        rep.mean_distance * rep.volume * rep.volume);

  // the g17 writer round-trips every float exactly
  const std::string text = dump_json_g17(j);
  const auto parsed = nlohmann::ordered_json::parse(text);
  CHECK(parsed.at("mean_length").get<double>() == rep.mean_length);
  CHECK(parsed.at("se_defect").get<double>() == rep.se_defect);
  CHECK(parsed.at("volume").get<double>() == rep.volume);
  CHECK(parsed.at("domain_histogram").at("0").get<std::int64_t>() ==
        rep.domain_histogram.at(0));
}

TEST_CASE("discontinuity scan: hemisphere example, restricted scans, torus tie") {
  auto hemi = ManifoldModel::hemisphere();
  auto [h1, h2] = hemisphere_planners();

  const auto w1 = discontinuity_scan(hemi, h1, 400, 1e-3, 15);
  REQUIRE(!w1.empty());
  for (const auto& w : w1) {
    CHECK(w.input_separation <= 1e-3);
    CHECK(w.output_separation >= 1.0);  // the jump spans the hemisphere
  }

  const auto away = [&hemi](const Point& p, const Point& q) {
    return *hemi.closed_form_distance(p, q) <= kPi - 0.1;
  };
  CHECK(discontinuity_scan(hemi, h2, 400, 1e-3, 15, away).empty());
  CHECK(!discontinuity_scan(hemi, h2, 400, 1e-3, 15).empty());

  auto s2 = ManifoldModel::sphere(2);
  const MotionPlanner sp = make_planner(s2, "sigma0+antipodal", 1e-6);
  const auto away_s = [&s2](const Point& p, const Point& q) {
    return *s2.closed_form_distance(p, q) <= kPi - 0.1;
  };
  CHECK(discontinuity_scan(s2, sp, 400, 1e-3, 16, away_s).empty());

  auto t1 = ManifoldModel::flat_torus(1);
  const MotionPlanner tp = make_planner(t1, "sigma0+torus-tiebreak", 1e-6);
  CHECK(!discontinuity_scan(t1, tp, 400, 1e-3, 17).empty());

  CHECK_THROWS_AS(discontinuity_scan(hemi, h1, 0, 1e-3, 1), ConfigError);
  CHECK_THROWS_AS(discontinuity_scan(hemi, h1, 10, 0.0, 1), ConfigError);
}

TEST_CASE("defect comparison across grids: refinement does not inflate it") {
  auto s2 = ManifoldModel::sphere(2);
  const MotionPlanner planner = make_planner(s2, "sigma0+antipodal", 1e-6);
  AuditOptions coarse;
  coarse.n_pairs = 2000;
  coarse.seed = 18;
  coarse.grid_size = 257;
  AuditOptions fine = coarse;
  fine.grid_size = 1025;
  const AuditReport rc = run_audit(s2, planner, coarse);
  const AuditReport rf = run_audit(s2, planner, fine);
  CHECK(rf.mean_length >= rc.mean_length - 1e-12);
  CHECK(rf.defect <= rc.defect + 1e-6);
}

TEST_CASE("invalid audit inputs are rejected") {
  auto s2 = ManifoldModel::sphere(2);
  const MotionPlanner planner = make_planner(s2, "sigma0+antipodal", 1e-6);
  AuditOptions opt;
  opt.n_pairs = 0;
  CHECK_THROWS_AS(run_audit(s2, planner, opt), ConfigError);
  opt.n_pairs = 1000;
  opt.grid_size = 33;
  CHECK_THROWS_AS(run_audit(s2, planner, opt), ConfigError);
  CHECK_THROWS_AS(estimate_distance_integral(s2, 0, 1), ConfigError);
}
