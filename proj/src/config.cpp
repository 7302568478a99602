#include "geoplan/config.hpp"

#include <cmath>
#include <fstream>

#include "geoplan/errors.hpp"

namespace geoplan {

void RunConfig::validate() const {
  if (n_pairs < 1000) throw ConfigError("config: n_pairs must be at least 1000");
  const int intervals = grid_size - 1;
  if (intervals < 64 || (intervals & (intervals - 1)) != 0)
    throw ConfigError("config: grid_size must be 2^k + 1 with k >= 6");
  if (!(cut_tolerance > 0.0) || cut_tolerance > 0.1)
    throw ConfigError("config: cut_tolerance must lie in (0, 0.1]");
  if (threads < 0) throw ConfigError("config: threads must be nonnegative");
  if (epsilons.empty()) throw ConfigError("config: epsilons must be nonempty");
  for (double e : epsilons)
    if (!std::isfinite(e) || e < 0.0)
      throw ConfigError("config: epsilons must be finite and >= 0");
  if (output_dir.empty()) throw ConfigError("config: output_dir must be nonempty");
  if (!manifold.is_object()) throw ConfigError("config: manifold must be an object");
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: root must be a JSON object");
  RunConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "manifold") c.manifold = value;
      else if (key == "planner") c.planner = value.get<std::string>();
      else if (key == "n_pairs") c.n_pairs = value.get<std::int64_t>();
      else if (key == "grid_size") c.grid_size = value.get<int>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "cut_tolerance") c.cut_tolerance = value.get<double>();
      else if (key == "output_dir") c.output_dir = value.get<std::string>();
      else if (key == "threads") c.threads = value.get<int>();
      else if (key == "epsilons") c.epsilons = value.get<std::vector<double>>();
      else throw ConfigError("config: unknown key \"" + key + "\"");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open \"" + path + "\"");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: parse error in \"" + path + "\": " + e.what());
  }
  return from_json(j);
}

nlohmann::ordered_json RunConfig::to_json() const {
  nlohmann::ordered_json j;
  j["manifold"] = nlohmann::ordered_json::parse(manifold.dump());
  j["planner"] = planner;
  j["n_pairs"] = n_pairs;
  j["grid_size"] = grid_size;
  j["seed"] = seed;
  j["cut_tolerance"] = cut_tolerance;
  j["output_dir"] = output_dir;
  j["threads"] = threads;
  j["epsilons"] = epsilons;
  return j;
}

}  // namespace geoplan
