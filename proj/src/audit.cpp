#include "geoplan/audit.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include <Eigen/Dense>

#include "geoplan/errors.hpp"
#include "geoplan/geodesic.hpp"
#include "geoplan/numeric.hpp"
#include "arc_util.hpp"

namespace geoplan {
namespace {

constexpr std::int64_t kBlockSize = 4096;
// Generator stream ids.  Stream 2 is reserved for check_properties.
constexpr std::uint64_t kStreamPairs = 0;
constexpr std::uint64_t kStreamCutband = 1;
constexpr std::uint64_t kStreamScan = 3;

constexpr int kMaxDomains = 16;

/// Runs fill(block_index, item_count, block) over ceil(n / kBlockSize)
/// blocks.  Work is stolen block-at-a-time by an atomic cursor, results land
/// in a slot vector indexed by block, and the caller reduces the slots in
/// index order, so the reduction is independent of the thread count.
template <typename Block, typename Fill>
std::vector<Block> run_blocked(std::int64_t n_items, int threads,
                               const Fill& fill) {
  const std::int64_t n_blocks = (n_items + kBlockSize - 1) / kBlockSize;
  std::vector<Block> blocks(static_cast<std::size_t>(n_blocks));
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = static_cast<int>(
      std::max<std::int64_t>(1, std::min<std::int64_t>(threads, n_blocks)));

  std::atomic<std::int64_t> cursor{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&]() {
    for (;;) {
      if (stop.load(std::memory_order_relaxed)) return;
      const std::int64_t b = cursor.fetch_add(1, std::memory_order_relaxed);
      if (b >= n_blocks) return;
      const std::int64_t begin = b * kBlockSize;
      const std::int64_t count = std::min(kBlockSize, n_items - begin);
      try {
        fill(b, count, blocks[static_cast<std::size_t>(b)]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        stop.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };

  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return blocks;
}

void accumulate(double x, double& sum, double& sum_sq) {
  sum += x;
  sum_sq += x * x;
}

EstimateResult finish(double sum, double sum_sq, std::int64_t n) {
  EstimateResult r;
  r.mean = sum / static_cast<double>(n);
  if (n > 1) {
    const double var =
        std::max(0.0, (sum_sq - static_cast<double>(n) * r.mean * r.mean) /
                          static_cast<double>(n - 1));
    r.standard_error = std::sqrt(var / static_cast<double>(n));
  }
  return r;
}

struct DistanceBlock {
  std::int64_t n = 0;
  double sum = 0.0;
  double sum_sq = 0.0;
};

struct AuditBlock {
  std::int64_t n = 0;
  double sum_len = 0.0, sum_len_sq = 0.0;
  double sum_dist = 0.0, sum_dist_sq = 0.0;
  double sum_def = 0.0, sum_def_sq = 0.0;
  double def_min = std::numeric_limits<double>::infinity();
  double def_max = -std::numeric_limits<double>::infinity();
  double def_max_d0 = -std::numeric_limits<double>::infinity();
  std::array<std::int64_t, kMaxDomains> histogram{};
};

std::pair<Point, Point> draw_pair(const ManifoldModel& m, RngState& rng) {
  Point p = m.sample_point(rng);
  Point q = m.sample_point(rng);
  return {std::move(p), std::move(q)};
}

/// Scalar margin mu(p, q) >= 0 with "in the epsilon cut band" <=> mu <= eps,
/// when one exists in closed form.
std::optional<double> cut_margin(const ManifoldModel& m, const Point& p,
                                 const Point& q) {
  switch (m.kind()) {
    case ManifoldKind::Sphere:
    case ManifoldKind::Hemisphere:
      return kPi - arc::sphere_angle(p.coords, q.coords);
    case ManifoldKind::FlatTorus: {
      double margin = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m.dim(); ++i) {
        margin = std::min(
            margin, kPi - std::abs(wrap_pi(q.coords[i] - p.coords[i])));
      }
      return margin;
    }
    case ManifoldKind::Ellipsoid:
      return std::nullopt;
  }
  return std::nullopt;
}

double output_distance(const ManifoldModel& m, const Point& a,
                       const Point& b) {
  if (auto d = m.closed_form_distance(a, b)) return *d;
  return (a.coords - b.coords).norm();
}

Point perturb(const ManifoldModel& m, const Point& p, double eta,
              RngState& rng) {
  if (m.kind() == ManifoldKind::FlatTorus) {
    Vec u(m.dim());
    for (int i = 0; i < m.dim(); ++i) u[i] = gaussian(rng);
    const double n = u.norm();
    Point out = p;
    if (n > 0.0) out.coords += (eta / n) * u;
    for (int i = 0; i < m.dim(); ++i) out.coords[i] = wrap_two_pi(out.coords[i]);
    return out;
  }
  Vec g(m.coord_dim());
  for (int i = 0; i < m.coord_dim(); ++i) g[i] = gaussian(rng);
  Vec u = m.tangent_project(p, g);
  const double n = u.norm();
  if (n > 0.0) u *= eta / n;
  Vec out = p.coords + u;
  if (m.kind() == ManifoldKind::Hemisphere && out[2] < 0.0) out[2] = 0.0;
  return m.project(out);
}

struct Straddle {
  Point p, q, q_alt;
};

/// Two targets a distance 2*eps apart that bracket the cut/tie locus seen
/// from p.  Drives the planner across its only possible jump sites.
std::optional<Straddle> make_straddle(const ManifoldModel& m, double eps,
                                      std::int64_t probe, RngState& rng) {
  Straddle s;
  switch (m.kind()) {
    case ManifoldKind::Sphere: {
      s.p = m.sample_point(rng);
      Vec g(m.coord_dim());
      for (int i = 0; i < m.coord_dim(); ++i) g[i] = gaussian(rng);
      Vec u = m.tangent_project(s.p, g);
      if (u.norm() < 1e-9) return std::nullopt;
      u.normalize();
      s.q.coords = -(std::cos(eps) * s.p.coords + std::sin(eps) * u);
      s.q_alt.coords = -(std::cos(eps) * s.p.coords - std::sin(eps) * u);
      s.q.coords.normalize();
      s.q_alt.coords.normalize();
      return s;
    }
    case ManifoldKind::Hemisphere: {
      // Boundary antipodes are the only cut pairs; straddle along A' itself.
      const double alpha = uniform(rng, 0.0, kTwoPi);
      s.p.coords = vec3(std::cos(alpha), std::sin(alpha), 0.0);
      s.q.coords =
          vec3(std::cos(alpha + kPi - eps), std::sin(alpha + kPi - eps), 0.0);
      s.q_alt.coords =
          vec3(std::cos(alpha + kPi + eps), std::sin(alpha + kPi + eps), 0.0);
      return s;
    }
    case ManifoldKind::FlatTorus: {
      const int n = m.dim();
      const int j = static_cast<int>(probe % n);
      s.p = m.sample_point(rng);
      Vec delta(n);
      for (int i = 0; i < n; ++i) delta[i] = uniform(rng, -2.0, 2.0);
      s.q.coords = s.p.coords;
      s.q_alt.coords = s.p.coords;
      for (int i = 0; i < n; ++i) {
        if (i == j) continue;
        s.q.coords[i] = wrap_two_pi(s.p.coords[i] + delta[i]);
        s.q_alt.coords[i] = s.q.coords[i];
      }
      s.q.coords[j] = wrap_two_pi(s.p.coords[j] + (kPi - eps));
      s.q_alt.coords[j] = wrap_two_pi(s.p.coords[j] - (kPi - eps));
      return s;
    }
    case ManifoldKind::Ellipsoid: {
      // Straddle the image of the antipode under the axis scaling; a crude
      // but effective bracket of the cut band on near-spherical inputs.
      s.p = m.sample_point(rng);
      const auto& ax = m.semi_axes();
      const Vec axes = vec3(ax[0], ax[1], ax[2]);
      Vec ph = s.p.coords.cwiseQuotient(axes).normalized();
      Vec g(3);
      for (int i = 0; i < 3; ++i) g[i] = gaussian(rng);
      Vec u = g - g.dot(ph) * ph;
      if (u.norm() < 1e-9) return std::nullopt;
      u.normalize();
      Vec qh = -(std::cos(eps) * ph + std::sin(eps) * u);
      Vec qh2 = -(std::cos(eps) * ph - std::sin(eps) * u);
      s.q.coords = qh.normalized().cwiseProduct(axes);
      s.q_alt.coords = qh2.normalized().cwiseProduct(axes);
      return s;
    }
  }
  return std::nullopt;
}

}  // namespace

std::string dump_json_g17(const nlohmann::ordered_json& j, int indent) {
  std::string out;
  const std::function<void(const nlohmann::ordered_json&, int)> emit =
      [&](const nlohmann::ordered_json& node, int depth) {
        const auto pad = [&](int d) { out.append(static_cast<std::size_t>(d) *
                                                 static_cast<std::size_t>(indent), ' '); };
        if (node.is_object()) {
          if (node.empty()) { out += "{}"; return; }
          out += "{\n";
          std::size_t i = 0;
          for (auto it = node.begin(); it != node.end(); ++it, ++i) {
            pad(depth + 1);
            out += nlohmann::ordered_json(it.key()).dump();
            out += ": ";
            emit(it.value(), depth + 1);
            if (i + 1 < node.size()) out += ',';
            out += '\n';
          }
          pad(depth);
          out += '}';
        } else if (node.is_array()) {
          if (node.empty()) { out += "[]"; return; }
          out += "[\n";
          for (std::size_t i = 0; i < node.size(); ++i) {
            pad(depth + 1);
            emit(node[i], depth + 1);
            if (i + 1 < node.size()) out += ',';
            out += '\n';
          }
          pad(depth);
          out += ']';
        } else if (node.is_number_float()) {
          const double x = node.get<double>();
          out += std::isfinite(x) ? format_g17(x) : "null";
        } else {
          out += node.dump();
        }
      };
  emit(j, 0);
  out += '\n';
  return out;
}

EstimateResult estimate_distance_integral(const ManifoldModel& m,
                                          std::int64_t n_pairs,
                                          std::uint64_t seed, int threads) {
  if (n_pairs < 1) throw ConfigError("estimate_distance_integral: n_pairs must be positive");
  const auto blocks = run_blocked<DistanceBlock>(
      n_pairs, threads,
      [&](std::int64_t b, std::int64_t count, DistanceBlock& out) {
        RngState rng = make_stream(seed, kStreamPairs, static_cast<std::uint64_t>(b));
        for (std::int64_t i = 0; i < count; ++i) {
          const auto [p, q] = draw_pair(m, rng);
          accumulate(distance(m, p, q), out.sum, out.sum_sq);
          ++out.n;
        }
      });
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& b : blocks) { sum += b.sum; sum_sq += b.sum_sq; }
  return finish(sum, sum_sq, n_pairs);
}

namespace {

AuditBlock reduce_audit_blocks(const std::vector<AuditBlock>& blocks) {
  AuditBlock total;
  for (const auto& b : blocks) {
    total.n += b.n;
    total.sum_len += b.sum_len;
    total.sum_len_sq += b.sum_len_sq;
    total.sum_dist += b.sum_dist;
    total.sum_dist_sq += b.sum_dist_sq;
    total.sum_def += b.sum_def;
    total.sum_def_sq += b.sum_def_sq;
    total.def_min = std::min(total.def_min, b.def_min);
    total.def_max = std::max(total.def_max, b.def_max);
    total.def_max_d0 = std::max(total.def_max_d0, b.def_max_d0);
    for (int d = 0; d < kMaxDomains; ++d) total.histogram[d] += b.histogram[d];
  }
  return total;
}

std::vector<AuditBlock> run_audit_pass(const ManifoldModel& m,
                                       const MotionPlanner& planner,
                                       std::int64_t n_pairs, int grid_size,
                                       std::uint64_t seed, int threads) {
  const double length_bound = 10.0 * m.diameter_bound();
  return run_blocked<AuditBlock>(
      n_pairs, threads,
      [&](std::int64_t b, std::int64_t count, AuditBlock& out) {
        RngState rng = make_stream(seed, kStreamPairs, static_cast<std::uint64_t>(b));
        for (std::int64_t i = 0; i < count; ++i) {
          const auto [p, q] = draw_pair(m, rng);
          const double dist = distance(m, p, q);
          const PlannedPath planned = planner.plan(p, q);
          if (planned.domain_id < 0 || planned.domain_id >= kMaxDomains)
            throw Error("audit: domain id out of histogram range");
          const DiscretePath dp = discretize(m, planned.path, grid_size);
          const double len = measure_length(dp).value;
          if (len > length_bound)
            throw ConstraintViolation(
                "audit: path length exceeds 10x diameter bound");
          const double defect = len - dist;
          accumulate(len, out.sum_len, out.sum_len_sq);
          accumulate(dist, out.sum_dist, out.sum_dist_sq);
          accumulate(defect, out.sum_def, out.sum_def_sq);
          out.def_min = std::min(out.def_min, defect);
          out.def_max = std::max(out.def_max, defect);
          if (planned.domain_id == 0)
            out.def_max_d0 = std::max(out.def_max_d0, defect);
          ++out.histogram[planned.domain_id];
          ++out.n;
        }
      });
}

}  // namespace

PlannerLengthEstimate estimate_planner_length(const ManifoldModel& m,
                                              const MotionPlanner& planner,
                                              std::int64_t n_pairs,
                                              int grid_size,
                                              std::uint64_t seed,
                                              int threads) {
  if (n_pairs < 1) throw ConfigError("estimate_planner_length: n_pairs must be positive");
  const AuditBlock total =
      reduce_audit_blocks(run_audit_pass(m, planner, n_pairs, grid_size, seed, threads));
  PlannerLengthEstimate est;
  est.length = finish(total.sum_len, total.sum_len_sq, n_pairs);
  for (int d = 0; d < kMaxDomains; ++d)
    if (total.histogram[d] > 0) est.domain_histogram[d] = total.histogram[d];
  return est;
}

std::vector<std::pair<double, double>> cutband_measure(
    const ManifoldModel& m, const std::vector<double>& epsilons,
    std::int64_t n_pairs, std::uint64_t seed, int threads) {
  if (n_pairs < 1) throw ConfigError("cutband_measure: n_pairs must be positive");
  for (double e : epsilons)
    if (!(e >= 0.0) || !std::isfinite(e))
      throw ConfigError("cutband_measure: epsilons must be finite and >= 0");
  const std::size_t ne = epsilons.size();

  struct Block {
    std::vector<std::int64_t> counts;
  };
  const auto blocks = run_blocked<Block>(
      n_pairs, threads,
      [&](std::int64_t b, std::int64_t count, Block& out) {
        out.counts.assign(ne, 0);
        RngState rng = make_stream(seed, kStreamCutband, static_cast<std::uint64_t>(b));
        for (std::int64_t i = 0; i < count; ++i) {
          const auto [p, q] = draw_pair(m, rng);
          if (const auto margin = cut_margin(m, p, q)) {
            for (std::size_t k = 0; k < ne; ++k)
              if (*margin <= epsilons[k]) ++out.counts[k];
          } else {
            for (std::size_t k = 0; k < ne; ++k)
              if (epsilons[k] > 0.0 && in_cut_locus(m, p, q, epsilons[k]))
                ++out.counts[k];
          }
        }
      });

  std::vector<std::int64_t> counts(ne, 0);
  for (const auto& b : blocks)
    for (std::size_t k = 0; k < ne; ++k) counts[k] += b.counts[k];
  std::vector<std::pair<double, double>> curve;
  curve.reserve(ne);
  for (std::size_t k = 0; k < ne; ++k)
    curve.emplace_back(epsilons[k],
                       static_cast<double>(counts[k]) / static_cast<double>(n_pairs));
  return curve;
}

AuditReport run_audit(const ManifoldModel& m, const MotionPlanner& planner,
                      const AuditOptions& options) {
  if (options.n_pairs < 1) throw ConfigError("run_audit: n_pairs must be positive");
  if (options.grid_size < 65)
    throw ConfigError("run_audit: grid_size must be at least 65");

  AuditReport report;
  report.planner_name = planner.name();
  report.manifold = m.to_config();
  report.n_pairs = options.n_pairs;
  report.grid_size = options.grid_size;
  report.seed = options.seed;
  report.cut_tolerance = options.cut_tolerance;
  report.volume = m.volume();

  const AuditBlock total = reduce_audit_blocks(run_audit_pass(
      m, planner, options.n_pairs, options.grid_size, options.seed,
      options.threads));

  const EstimateResult len = finish(total.sum_len, total.sum_len_sq, total.n);
  const EstimateResult dist = finish(total.sum_dist, total.sum_dist_sq, total.n);
  const EstimateResult def = finish(total.sum_def, total.sum_def_sq, total.n);
  report.mean_length = len.mean;
  report.se_length = len.standard_error;
  report.mean_distance = dist.mean;
  report.se_distance = dist.standard_error;
  report.defect = def.mean;
  report.se_defect = def.standard_error;
  report.pointwise_defect_min = total.def_min;
  report.pointwise_defect_max = total.def_max;
  report.max_defect_domain0 =
      std::isfinite(total.def_max_d0) ? total.def_max_d0 : 0.0;
  for (int d = 0; d < kMaxDomains; ++d)
    if (total.histogram[d] > 0) report.domain_histogram[d] = total.histogram[d];

  report.cutband_curve =
      cutband_measure(m, options.cutband_epsilons, options.n_pairs,
                      options.seed, options.threads);
  return report;
}

nlohmann::ordered_json AuditReport::to_json() const {
  nlohmann::ordered_json j;
  j["schema"] = 1;
  j["planner"] = planner_name;
  j["manifold"] = nlohmann::ordered_json::parse(manifold.dump());
  j["seed"] = seed;
  j["n_pairs"] = n_pairs;
  j["grid_size"] = grid_size;
  j["cut_tolerance"] = cut_tolerance;
  j["volume"] = volume;
  j["mean_length"] = mean_length;
  j["se_length"] = se_length;
  j["mean_distance"] = mean_distance;
  j["se_distance"] = se_distance;
  j["defect"] = defect;
  j["se_defect"] = se_defect;
  j["pointwise_defect_min"] = pointwise_defect_min;
  j["pointwise_defect_max"] = pointwise_defect_max;
  j["max_defect_domain0"] = max_defect_domain0;
  j["unnormalized_length_integral"] = mean_length * volume * volume;
  j["unnormalized_distance_integral"] = mean_distance * volume * volume;
  nlohmann::ordered_json hist = nlohmann::ordered_json::object();
  for (const auto& [domain, count] : domain_histogram)
    hist[std::to_string(domain)] = count;
  j["domain_histogram"] = hist;
  nlohmann::ordered_json curve = nlohmann::ordered_json::array();
  for (const auto& [eps, frac] : cutband_curve)
    curve.push_back(nlohmann::ordered_json::array({eps, frac}));
  j["cutband_curve"] = curve;
  return j;
}

std::vector<Witness> discontinuity_scan(
    const ManifoldModel& m, const MotionPlanner& planner,
    std::int64_t n_probe_pairs, double delta, std::uint64_t seed,
    const std::function<bool(const Point&, const Point&)>& restrict) {
  if (n_probe_pairs < 1)
    throw ConfigError("discontinuity_scan: n_probe_pairs must be positive");
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw ConfigError("discontinuity_scan: delta must be positive");

  constexpr int kScanGrid = 257;
  constexpr std::size_t kMaxWitnesses = 64;
  const double eps = delta / 4.0;

  std::vector<Witness> witnesses;
  RngState rng = make_stream(seed, kStreamScan);
  for (std::int64_t probe = 0; probe < n_probe_pairs; ++probe) {
    Point p, q, p2, q2;
    if (probe % 2 == 0) {
      auto s = make_straddle(m, eps, probe / 2, rng);
      if (!s) continue;
      p = s->p;
      q = s->q;
      p2 = s->p;
      q2 = s->q_alt;
    } else {
      p = m.sample_point(rng);
      q = m.sample_point(rng);
      p2 = perturb(m, p, eps, rng);
      q2 = perturb(m, q, eps, rng);
    }
    if (restrict && (!restrict(p, q) || !restrict(p2, q2))) continue;

    double input_sep = 0.0;
    try {
      input_sep = distance(m, p, p2) + distance(m, q, q2);
    } catch (const Error&) {
      continue;
    }
    if (input_sep > delta) continue;

    double sup = 0.0;
    try {
      const PlannedPath a = planner.plan(p, q);
      const PlannedPath b = planner.plan(p2, q2);
      for (int i = 0; i < kScanGrid; ++i) {
        const double t = static_cast<double>(i) / (kScanGrid - 1);
        sup = std::max(sup, output_distance(m, a.path(t), b.path(t)));
      }
    } catch (const Error&) {
      continue;
    }
    if (sup >= 0.5) {
      Witness w;
      w.p = p;
      w.q = q;
      w.p_alt = p2;
      w.q_alt = q2;
      w.input_separation = input_sep;
      w.output_separation = sup;
      witnesses.push_back(std::move(w));
      if (witnesses.size() >= kMaxWitnesses) break;
    }
  }
  return witnesses;
}

}  // namespace geoplan
