#pragma once

// Run configuration files.
//
// One `key = value` per line; list values are comma separated; `#` starts a comment.
// Unknown and repeated keys are errors. Recognised keys:
//
//   p, rho, nu, alpha, n, m, master_seed, w0,
//   table_n, table_alpha,
//   rate_n, rate_m, rate_n_extended,
//   bounds_kind (t_model | generic), bounds_constant (number | fit), bounds_safety,
//   bounds_radius, bounds_grid, bounds_calibration_grid, bounds_n_mc, bounds_nu, bounds_alpha
//
// Omitted keys keep the SimConfig defaults.

#include <filesystem>
#include <string>
#include <string_view>

#include "qqvar/montecarlo.hpp"

namespace qqvar {

SimConfig parse_config(std::string_view text);

/// Reads a config file, or the config echoed inside a run manifest (`*.json`).
SimConfig load_config(const std::filesystem::path& path);

/// Canonical text form; parse_config(echo_config(c)) reproduces c.
std::string echo_config(const SimConfig& config);

}  // namespace qqvar
