#pragma once

#include <vector>

#include "geoplan/config.hpp"

namespace geoplan {

/// Exit codes shared by every subcommand: 0 success, 2 runtime planner
/// failure, 3 config/validation error.  No other codes are produced.
inline constexpr int kExitSuccess = 0;
inline constexpr int kExitRuntime = 2;
inline constexpr int kExitConfig = 3;

/// Writes <output_dir>/audit.json (AuditReport, schema 1).
int cmd_audit(const RunConfig& config);

/// Writes <output_dir>/properties.json; exit 0 iff all three properties pass.
int cmd_properties(const RunConfig& config);

/// Writes <output_dir>/cutband.csv with header "epsilon,fraction".
int cmd_cutband(const RunConfig& config);

/// Writes <output_dir>/path.csv with header "t,x1,...,xk" for the dispatched
/// path from p to q; prints length, distance and domain id on stdout.
int cmd_path(const RunConfig& config, const std::vector<double>& p,
             const std::vector<double>& q);

/// Full argument parsing for the geoplan binary.
int run_cli(int argc, const char* const* argv);

}  // namespace geoplan
