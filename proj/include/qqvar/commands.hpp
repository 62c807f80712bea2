#pragma once

// Command implementations behind the qqvar executable. Each returns the process exit status:
// 0 success, 1 numerical failure, 2 malformed configuration or arguments, 3 I/O failure.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "qqvar/inference.hpp"

namespace qqvar::cli {

enum ExitCode : int { kOk = 0, kNumerical = 1, kBadConfig = 2, kIo = 3 };

/// Name of the environment variable that supplies the default output directory.
inline constexpr const char* kOutDirEnv = "QQVAR_OUT_DIR";

struct RunOptions {
  std::filesystem::path config;
  std::filesystem::path out;  ///< empty: $QQVAR_OUT_DIR, else ./out
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool extended = false;   ///< rate: add the rate_n_extended endpoint
  bool synthetic = false;  ///< rate: fit an injected exact power law instead of simulating
};

struct ModelOptions {
  int p = 5;
  double rho = 0.5;
  double nu = 10;
  std::vector<double> mu;  ///< empty: zero location
};

struct DecomposeOptions {
  ModelOptions model;
  std::vector<double> w0;     ///< empty: equal weights
  std::vector<double> w_hat;  ///< empty: perturb w0 with the seed
  bool same_weights = false;  ///< w_hat = w0
  double alpha = 0.95;
  long n = 10000;
  std::uint64_t seed = 1;
};

struct CiOptions {
  ModelOptions model;
  std::vector<double> w;  ///< empty: equal weights
  double alpha = 0.95;
  double gamma = 0.05;
  long n = 10000;
  std::uint64_t seed = 1;
  DensityMethod method = DensityMethod::analytic;
  bool at_q_hat = false;  ///< evaluate the density at the empirical rather than the population quantile
};

int cmd_simulate(const RunOptions& opts, std::ostream& log);
int cmd_rate(const RunOptions& opts, std::ostream& log);
int cmd_bounds(const RunOptions& opts, std::ostream& log);
int cmd_decompose(const DecomposeOptions& opts, std::ostream& out, std::ostream& log);
int cmd_ci(const CiOptions& opts, std::ostream& out, std::ostream& log);

std::filesystem::path resolve_out_dir(const std::filesystem::path& requested);

}  // namespace qqvar::cli
