#include "geoplan/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "geoplan/audit.hpp"
#include "geoplan/errors.hpp"
#include "geoplan/numeric.hpp"
#include "geoplan/planner.hpp"

namespace geoplan {
namespace {

std::filesystem::path prepare_output(const RunConfig& config,
                                     const std::string& filename) {
  std::filesystem::path dir(config.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("config: cannot create output_dir \"" +
                            config.output_dir + "\": " + ec.message());
  return dir / filename;
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("config: cannot write \"" + path.string() + "\"");
  out << body;
  if (!out) throw ConfigError("config: write failed for \"" + path.string() + "\"");
}

/// Maps the library's exception taxonomy onto the three exit codes.
template <typename Fn>
int guarded(const Fn& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

struct Built {
  ManifoldModel manifold;
  MotionPlanner planner;
};

Built build(const RunConfig& config) {
  config.validate();
  ManifoldModel m = ManifoldModel::from_config(config.manifold);
  MotionPlanner planner = make_planner(m, config.planner, config.cut_tolerance);
  return {std::move(m), std::move(planner)};
}

}  // namespace

int cmd_audit(const RunConfig& config) {
  return guarded([&]() {
    const Built b = build(config);
    AuditOptions opt;
    opt.n_pairs = config.n_pairs;
    opt.grid_size = config.grid_size;
    opt.seed = config.seed;
    opt.cut_tolerance = config.cut_tolerance;
    opt.threads = config.threads;
    opt.cutband_epsilons = config.epsilons;
    const AuditReport report = run_audit(b.manifold, b.planner, opt);
    const auto path = prepare_output(config, "audit.json");
    write_file(path, dump_json_g17(report.to_json()));
    std::cout << "wrote " << path.string() << '\n'
              << "planner " << report.planner_name << " on "
              << b.manifold.name() << ", n_pairs " << report.n_pairs << '\n'
              << "defect " << format_g17(report.defect) << " +- "
              << format_g17(report.se_defect) << '\n';
    return kExitSuccess;
  });
}

int cmd_properties(const RunConfig& config) {
  return guarded([&]() {
    const Built b = build(config);
    const PropertyReport rep = check_properties(
        b.manifold, b.planner, static_cast<int>(config.n_pairs), config.seed);

    nlohmann::ordered_json j;
    j["schema"] = 1;
    j["planner"] = config.planner;
    j["manifold"] = nlohmann::ordered_json::parse(config.manifold.dump());
    j["seed"] = config.seed;
    j["n_pairs"] = rep.n_pairs;
    j["max_diagonal_deviation"] = rep.max_diagonal;
    j["diagonal_tolerance"] = PropertyReport::kDiagonalTol;
    j["diagonal_pass"] = rep.diagonal_ok();
    j["max_reversal_deviation"] = rep.max_reversal;
    j["reversal_tolerance"] = PropertyReport::kReversalTol;
    j["reversal_pass"] = rep.reversal_ok();
    j["max_reevaluation_deviation"] = rep.max_reeval;
    j["reevaluation_tolerance"] = PropertyReport::kReevalTol;
    j["reevaluation_pass"] = rep.reeval_ok();
    j["all_pass"] = rep.all_ok();

    const auto path = prepare_output(config, "properties.json");
    write_file(path, dump_json_g17(j));
    std::cout << "wrote " << path.string() << '\n'
              << "diagonal " << format_g17(rep.max_diagonal) << " reversal "
              << format_g17(rep.max_reversal) << " re-evaluation "
              << format_g17(rep.max_reeval) << '\n';
    if (!rep.all_ok()) {
      std::cerr << "error: planner \"" << config.planner
                << "\" fails at least one property\n";
      return kExitRuntime;
    }
    return kExitSuccess;
  });
}

int cmd_cutband(const RunConfig& config) {
  return guarded([&]() {
    const Built b = build(config);
    const auto curve = cutband_measure(b.manifold, config.epsilons,
                                       config.n_pairs, config.seed,
                                       config.threads);
    std::string csv = "epsilon,fraction\n";
    for (const auto& [eps, frac] : curve) {
      csv += format_g17(eps);
      csv += ',';
      csv += format_g17(frac);
      csv += '\n';
    }
    const auto path = prepare_output(config, "cutband.csv");
    write_file(path, csv);
    std::cout << "wrote " << path.string() << '\n';
    return kExitSuccess;
  });
}

int cmd_path(const RunConfig& config, const std::vector<double>& p,
             const std::vector<double>& q) {
  return guarded([&]() {
    const Built b = build(config);
    const int k = b.manifold.coord_dim();
    if (static_cast<int>(p.size()) != k || static_cast<int>(q.size()) != k)
      throw ConfigError("config: --p and --q must have " + std::to_string(k) +
                        " coordinates for " + b.manifold.name());
    Point pp, qq;
    pp.coords = Vec(k);
    qq.coords = Vec(k);
    for (int i = 0; i < k; ++i) {
      pp.coords[i] = p[i];
      qq.coords[i] = q[i];
    }
    try {
      b.manifold.validate(pp);
      b.manifold.validate(qq);
    } catch (const ConstraintViolation& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }

    const PlannedPath planned = b.planner.plan(pp, qq);
    const DiscretePath dp = discretize(b.manifold, planned.path,
                                       config.grid_size);
    const double len = measure_length(dp).value;
    const double dist = distance(b.manifold, pp, qq);

    std::string csv = "t";
    for (int i = 1; i <= k; ++i) csv += ",x" + std::to_string(i);
    csv += '\n';
    for (int row = 0; row < dp.grid_size(); ++row) {
      csv += format_g17(static_cast<double>(row) / (dp.grid_size() - 1));
      for (int i = 0; i < k; ++i) {
        csv += ',';
        csv += format_g17(dp.samples[static_cast<std::size_t>(row)].coords[i]);
      }
      csv += '\n';
    }
    const auto path = prepare_output(config, "path.csv");
    write_file(path, csv);
    std::cout << "wrote " << path.string() << '\n'
              << "length = " << format_g17(len) << '\n'
              << "distance = " << format_g17(dist) << '\n'
              << "domain_id = " << planned.domain_id << '\n';
    return kExitSuccess;
  });
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Motion-planning efficiency audits on compact manifolds"};
  app.require_subcommand(1);

  std::string config_path;
  RunConfig flags;  // flag targets; only flags the user set override the file
  std::vector<double> p_coords, q_coords;

  struct Tracked {
    CLI::Option* config = nullptr;
    CLI::Option* seed = nullptr;
    CLI::Option* pairs = nullptr;
    CLI::Option* grid = nullptr;
    CLI::Option* threads = nullptr;
    CLI::Option* out = nullptr;
    CLI::Option* epsilons = nullptr;
  };

  auto add_common = [&](CLI::App* sub) {
    Tracked t;
    t.config = sub->add_option("--config", config_path, "JSON config file");
    t.seed = sub->add_option("--seed", flags.seed, "generator seed");
    t.pairs = sub->add_option("--pairs", flags.n_pairs, "number of sample pairs");
    t.grid = sub->add_option("--grid", flags.grid_size, "path grid size (2^k + 1)");
    t.threads = sub->add_option("--threads", flags.threads,
                                "worker threads (0 = all; never affects results)");
    t.out = sub->add_option("--out", flags.output_dir, "output directory");
    t.epsilons = sub->add_option("--epsilons", flags.epsilons,
                                 "cut-band epsilon list")
                     ->delimiter(',');
    return t;
  };

  CLI::App* audit = app.add_subcommand("audit", "Monte-Carlo efficiency audit");
  CLI::App* properties =
      app.add_subcommand("properties", "check the three planner properties");
  CLI::App* cutband = app.add_subcommand("cutband", "cut-band measure curve");
  CLI::App* path_cmd = app.add_subcommand("path", "export one dispatched path");
  const Tracked t_audit = add_common(audit);
  const Tracked t_props = add_common(properties);
  const Tracked t_cut = add_common(cutband);
  const Tracked t_path = add_common(path_cmd);
  path_cmd->add_option("--p", p_coords, "start point coordinates")
      ->delimiter(',')
      ->required();
  path_cmd->add_option("--q", q_coords, "goal point coordinates")
      ->delimiter(',')
      ->required();

  try {
    app.parse(argc, const_cast<char**>(argv));
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitSuccess : kExitConfig;
  }

  const Tracked* tracked = nullptr;
  CLI::App* active = nullptr;
  if (app.got_subcommand(audit)) { tracked = &t_audit; active = audit; }
  else if (app.got_subcommand(properties)) { tracked = &t_props; active = properties; }
  else if (app.got_subcommand(cutband)) { tracked = &t_cut; active = cutband; }
  else { tracked = &t_path; active = path_cmd; }
  (void)active;

  RunConfig config;
  if (tracked->config->count() > 0) {
    try {
      config = RunConfig::load(config_path);
    } catch (const ConfigError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitConfig;
    }
  }
  if (tracked->seed->count() > 0) config.seed = flags.seed;
  if (tracked->pairs->count() > 0) config.n_pairs = flags.n_pairs;
  if (tracked->grid->count() > 0) config.grid_size = flags.grid_size;
  if (tracked->threads->count() > 0) config.threads = flags.threads;
  if (tracked->out->count() > 0) config.output_dir = flags.output_dir;
  if (tracked->epsilons->count() > 0) config.epsilons = flags.epsilons;

  if (tracked == &t_audit) return cmd_audit(config);
  if (tracked == &t_props) return cmd_properties(config);
  if (tracked == &t_cut) return cmd_cutband(config);
  return cmd_path(config, p_coords, q_coords);
}

}  // namespace geoplan
