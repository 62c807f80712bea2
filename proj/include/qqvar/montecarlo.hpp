#pragma once

// Replication engine for the decomposition study: weight perturbation, per-cell summaries
// with Monte Carlo standard errors, table assembly and the log-log rate regression.
//
// Seeding: replication j of cell (nu, alpha, n) uses
//   derive_seed(master_seed, {bits(nu), bits(alpha), n, j})
// and two substreams of it, one for the weight perturbation and one for the sample. Results
// are stored per replication and reduced in replication order, so they do not depend on the
// number of worker threads.

#include <Eigen/Core>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "qqvar/bounds.hpp"
#include "qqvar/dist.hpp"

namespace qqvar {

inline constexpr const char* kQuantileConvention = "order_statistic_ceil_n_alpha";
inline constexpr const char* kRelContributionFormula = "mean|d3| / (mean|d1| + mean|d2| + mean|d3|)";

struct SimConfig {
  int p = 5;
  double rho = 0.5;
  std::vector<double> nu_list{10, 5, 3, 2};
  std::vector<double> alpha_list{0.90, 0.95, 0.99};
  std::vector<long> n_list{1000, 5000, 10000};
  long m = 10000;
  std::uint64_t master_seed = 20240917;
  Eigen::VectorXd w0;  ///< empty means equal weights 1/p

  // Table layout: Table-1/Table-2 rows use table_n, the sample-size sweep uses table_alpha.
  long table_n = 0;         ///< 0 means the largest entry of n_list
  double table_alpha = 0;   ///< 0 means 0.95 when listed, else the first alpha

  // Rate study.
  std::vector<long> rate_n{1000, 10000, 100000};
  long rate_m = 2000;
  long rate_n_extended = 1000000;

  // Bound verification.
  BoundKind bounds_kind = BoundKind::t_model;
  double bounds_constant = std::numeric_limits<double>::quiet_NaN();  ///< NaN means fit
  double bounds_safety = 1.5;
  double bounds_radius = 0.05;
  int bounds_grid = 100;
  int bounds_calibration_grid = 100;
  long bounds_n_mc = 200000;
  double bounds_nu = 10;
  double bounds_alpha = 0.95;

  /// Throws ConfigError when a field is out of range or Sigma is not positive definite.
  void validate() const;

  Eigen::VectorXd reference_weights() const;
  MvtModel<double> model(double nu) const;
  long resolved_table_n() const;
  double resolved_table_alpha() const;
};

struct CellKey {
  double nu = 10;
  double alpha = 0.95;
  long n = 10000;
};

struct McCellSummary {
  double nu = 0;
  double alpha = 0;
  long n = 0;
  long m = 0;
  double mean_abs_d1 = 0;
  double mean_abs_d2 = 0;
  double mean_abs_d3 = 0;
  double mcse_d1 = 0;
  double mcse_d2 = 0;
  double mcse_d3 = 0;
  double rel_contribution_d3 = 0;
  bool boundary_flag = false;
  long weight_resamples = 0;
};

struct RateFit {
  double nu = 0;
  double alpha = 0;
  double slope = 0;
  double intercept = 0;
  double r_squared = 0;
  std::vector<std::pair<double, double>> points;  ///< (log n, log mean|d3|)
};

struct PerturbedWeights {
  Eigen::VectorXd w;
  long resamples = 0;
};

/// (w0 + eps) / sum(w0 + eps) with eps ~ N(0, I / n); redraws while |sum| < 1e-8.
PerturbedWeights perturb_weights_traced(const Eigen::VectorXd& w0, long n, std::uint64_t seed);
Eigen::VectorXd perturb_weights(const Eigen::VectorXd& w0, long n, std::uint64_t seed);

std::uint64_t replication_seed(std::uint64_t master_seed, const CellKey& cell, long replication);

/// Absolute decomposition components of one replication.
struct ReplicationResult {
  double abs_d1 = 0;
  double abs_d2 = 0;
  double abs_d3 = 0;
  long resamples = 0;
};

ReplicationResult run_replication(const MvtModel<double>& model, const Eigen::VectorXd& w0, const CellKey& cell, std::uint64_t seed);

McCellSummary run_cell(const SimConfig& config, const CellKey& cell, long m, std::uint64_t master_seed, int threads = 1);

/// OLS of log mean|d3| on log n over cells sharing (nu, alpha).
RateFit rate_regression(const std::vector<McCellSummary>& cells);

/// OLS of log y on log n.
RateFit fit_loglog(const std::vector<long>& n, const std::vector<double>& y);

struct TableSet {
  long table_n = 0;
  double table_alpha = 0;
  std::vector<McCellSummary> cells;  ///< every cell that was run, in run order

  const McCellSummary* find(double nu, double alpha, long n) const;
};

/// Runs every cell needed by the three tables: all (nu, alpha) at table_n and all (nu, n) at
/// table_alpha.
TableSet reproduce_tables(const SimConfig& config, int threads = 1);

}  // namespace qqvar
