#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace geoplan {

/// One reproducible run: identical configs produce byte-identical outputs.
struct RunConfig {
  nlohmann::json manifold = {{"kind", "sphere"}, {"n", 2}};
  std::string planner = "sigma0+antipodal";
  std::int64_t n_pairs = 100000;
  int grid_size = 257;
  std::uint64_t seed = 0;
  double cut_tolerance = 1e-6;
  std::string output_dir = ".";
  int threads = 0;  // 0 = available parallelism; does not affect outputs
  std::vector<double> epsilons = {0.1, 0.05, 0.025, 0.0125};

  /// Throws ConfigError unless n_pairs >= 1000, grid_size = 2^k + 1 with
  /// k >= 6, and cut_tolerance lies in (0, 0.1].
  void validate() const;

  /// Unknown keys are rejected so that typos fail loudly.
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::string& path);
  nlohmann::ordered_json to_json() const;
};

}  // namespace geoplan
