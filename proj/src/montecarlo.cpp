#include "qqvar/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "qqvar/decomposition.hpp"
#include "qqvar/errors.hpp"
#include "qqvar/random.hpp"

namespace qqvar {

void SimConfig::validate() const {
  if (p < 1) throw ConfigError("p must be at least 1");
  if (p > 1 && !(rho > -1.0 / (p - 1) && rho < 1)) throw ConfigError("rho must lie in (-1/(p-1), 1)");
  if (nu_list.empty() || alpha_list.empty() || n_list.empty()) throw ConfigError("nu, alpha and n lists must be nonempty");
  for (double nu : nu_list)
    if (!(nu > 0) || !std::isfinite(nu)) throw ConfigError("degrees of freedom must be positive");
  for (double a : alpha_list)
    if (!(a > 0 && a < 1)) throw ConfigError("alpha values must lie in (0, 1)");
  for (long n : n_list)
    if (n < 1) throw ConfigError("sample sizes must be positive");
  if (m < 2) throw ConfigError("m must be at least 2");
  if (w0.size() != 0) {
    if (w0.size() != p) throw ConfigError("w0 length does not match p");
    if (std::abs(w0.sum() - 1) > 1e-12) throw ConfigError("w0 must sum to one");
  }
  if (table_n < 0) throw ConfigError("table_n must be nonnegative");
  if (table_n != 0 && std::find(n_list.begin(), n_list.end(), table_n) == n_list.end()) throw ConfigError("table_n must appear in n");
  if (table_alpha != 0 && std::find(alpha_list.begin(), alpha_list.end(), table_alpha) == alpha_list.end())
    throw ConfigError("table_alpha must appear in alpha");
  if (rate_n.size() < 3) throw ConfigError("rate_n needs at least three sample sizes");
  for (long n : rate_n)
    if (n < 1) throw ConfigError("rate sample sizes must be positive");
  if (rate_m < 2) throw ConfigError("rate_m must be at least 2");
  if (rate_n_extended < 1) throw ConfigError("rate_n_extended must be positive");
  if (!(bounds_safety > 0) || !(bounds_radius >= 0) || bounds_grid < 1 || bounds_calibration_grid < 2 || bounds_n_mc < 1)
    throw ConfigError("invalid bounds settings");
  if (!std::isnan(bounds_constant) && !(bounds_constant > 0)) throw ConfigError("bounds_constant must be positive or 'fit'");
  if (!(bounds_nu > 0) || !(bounds_alpha > 0 && bounds_alpha < 1)) throw ConfigError("invalid bounds_nu or bounds_alpha");
  try {
    (void)model(nu_list.front());
  } catch (const ModelError& e) {
    throw ConfigError(std::string("scatter matrix: ") + e.what());
  }
}

Eigen::VectorXd SimConfig::reference_weights() const {
  if (w0.size() != 0) return w0;
  return Eigen::VectorXd::Constant(p, 1.0 / p);
}

MvtModel<double> SimConfig::model(double nu) const { return MvtModel<double>::equicorrelated(p, rho, nu); }

long SimConfig::resolved_table_n() const {
  return table_n != 0 ? table_n : *std::max_element(n_list.begin(), n_list.end());
}

double SimConfig::resolved_table_alpha() const {
  if (table_alpha != 0) return table_alpha;
  return std::find(alpha_list.begin(), alpha_list.end(), 0.95) != alpha_list.end() ? 0.95 : alpha_list.front();
}

PerturbedWeights perturb_weights_traced(const Eigen::VectorXd& w0, long n, std::uint64_t seed) {
  if (n < 1) throw ArgumentError("perturb_weights: n must be at least 1");
  Rng rng(seed);
  const double sd = 1.0 / std::sqrt(static_cast<double>(n));
  PerturbedWeights out;
  for (;;) {
    Eigen::VectorXd w(w0.size());
    for (Eigen::Index k = 0; k < w.size(); ++k) w(k) = w0(k) + sd * rng.normal();
    const double s = w.sum();
    if (std::abs(s) >= 1e-8) {
      out.w = w / s;
      return out;
    }
    ++out.resamples;
  }
}

Eigen::VectorXd perturb_weights(const Eigen::VectorXd& w0, long n, std::uint64_t seed) { return perturb_weights_traced(w0, n, seed).w; }

std::uint64_t replication_seed(std::uint64_t master_seed, const CellKey& cell, long replication) {
  return derive_seed(master_seed, {bits_of(cell.nu), bits_of(cell.alpha), static_cast<std::uint64_t>(cell.n), static_cast<std::uint64_t>(replication)});
}

ReplicationResult run_replication(const MvtModel<double>& model, const Eigen::VectorXd& w0, const CellKey& cell, std::uint64_t seed) {
  const auto weights = perturb_weights_traced(w0, cell.n, derive_seed(seed, {0}));
  const auto sample = sample_mvt(model, cell.n, derive_seed(seed, {1}));
  const auto dec = compute(model, sample, w0, weights.w, cell.alpha);
  return {std::abs(dec.d1), std::abs(dec.d2), std::abs(dec.d3), weights.resamples};
}

McCellSummary run_cell(const SimConfig& config, const CellKey& cell, long m, std::uint64_t master_seed, int threads) {
  if (m < 2) throw ArgumentError("run_cell: need at least two replications");
  const auto model = config.model(cell.nu);
  const Eigen::VectorXd w0 = config.reference_weights();

  std::vector<ReplicationResult> results(static_cast<std::size_t>(m));
  std::atomic<long> next{0};
  std::mutex failure_mutex;
  long failed_at = m;
  std::exception_ptr failure;

  auto worker = [&] {
    for (;;) {
      const long j = next.fetch_add(1);
      if (j >= m) return;
      try {
        results[static_cast<std::size_t>(j)] = run_replication(model, w0, cell, replication_seed(master_seed, cell, j));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        // Keep the lowest failing index so the reported error does not depend on scheduling.
        if (j < failed_at) {
          failed_at = j;
          failure = std::current_exception();
        }
      }
    }
  };
  const int workers = std::max(1, threads);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  double s1 = 0, s2 = 0, s3 = 0;
  long resamples = 0;
  for (const auto& r : results) {
    s1 += r.abs_d1;
    s2 += r.abs_d2;
    s3 += r.abs_d3;
    resamples += r.resamples;
  }
  const double md = static_cast<double>(m);
  McCellSummary out;
  out.nu = cell.nu;
  out.alpha = cell.alpha;
  out.n = cell.n;
  out.m = m;
  out.mean_abs_d1 = s1 / md;
  out.mean_abs_d2 = s2 / md;
  out.mean_abs_d3 = s3 / md;
  double v1 = 0, v2 = 0, v3 = 0;
  for (const auto& r : results) {
    v1 += (r.abs_d1 - out.mean_abs_d1) * (r.abs_d1 - out.mean_abs_d1);
    v2 += (r.abs_d2 - out.mean_abs_d2) * (r.abs_d2 - out.mean_abs_d2);
    v3 += (r.abs_d3 - out.mean_abs_d3) * (r.abs_d3 - out.mean_abs_d3);
  }
  out.mcse_d1 = std::sqrt(v1 / (md - 1) / md);
  out.mcse_d2 = std::sqrt(v2 / (md - 1) / md);
  out.mcse_d3 = std::sqrt(v3 / (md - 1) / md);
  const double denom = out.mean_abs_d1 + out.mean_abs_d2 + out.mean_abs_d3;
  out.rel_contribution_d3 = denom > 0 ? out.mean_abs_d3 / denom : 0.0;
  out.boundary_flag = model.boundary();
  out.weight_resamples = resamples;
  return out;
}

RateFit fit_loglog(const std::vector<long>& n, const std::vector<double>& y) {
  if (n.size() != y.size()) throw ArgumentError("fit_loglog: size mismatch");
  std::vector<long> distinct = n;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3) throw ArgumentError("rate regression needs at least three distinct sample sizes");
  RateFit fit;
  const auto k = static_cast<Eigen::Index>(n.size());
  Eigen::VectorXd x(k), v(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    if (n[static_cast<std::size_t>(i)] < 1 || !(y[static_cast<std::size_t>(i)] > 0)) throw ArgumentError("fit_loglog: values must be positive");
    x(i) = std::log(static_cast<double>(n[static_cast<std::size_t>(i)]));
    v(i) = std::log(y[static_cast<std::size_t>(i)]);
    fit.points.emplace_back(x(i), v(i));
  }
  const double mx = x.mean();
  const double mv = v.mean();
  const Eigen::VectorXd xc = x.array() - mx;
  const Eigen::VectorXd vc = v.array() - mv;
  fit.slope = xc.dot(vc) / xc.squaredNorm();
  fit.intercept = mv - fit.slope * mx;
  const double ss_tot = vc.squaredNorm();
  const double ss_res = (vc - fit.slope * xc).squaredNorm();
  fit.r_squared = ss_tot > 0 ? std::clamp(1 - ss_res / ss_tot, 0.0, 1.0) : 1.0;
  return fit;
}

RateFit rate_regression(const std::vector<McCellSummary>& cells) {
  if (cells.empty()) throw ArgumentError("rate_regression: no cells");
  std::vector<long> n;
  std::vector<double> y;
  for (const auto& c : cells) {
    if (c.nu != cells.front().nu || c.alpha != cells.front().alpha) throw ArgumentError("rate_regression: cells must share (nu, alpha)");
    n.push_back(c.n);
    y.push_back(c.mean_abs_d3);
  }
  auto fit = fit_loglog(n, y);
  fit.nu = cells.front().nu;
  fit.alpha = cells.front().alpha;
  return fit;
}

const McCellSummary* TableSet::find(double nu, double alpha, long n) const {
  for (const auto& c : cells)
    if (c.nu == nu && c.alpha == alpha && c.n == n) return &c;
  return nullptr;
}

TableSet reproduce_tables(const SimConfig& config, int threads) {
  config.validate();
  TableSet set;
  set.table_n = config.resolved_table_n();
  set.table_alpha = config.resolved_table_alpha();
  auto run = [&](double nu, double alpha, long n) {
    if (set.find(nu, alpha, n) != nullptr) return;
    set.cells.push_back(run_cell(config, {nu, alpha, n}, config.m, config.master_seed, threads));
  };
  for (double nu : config.nu_list)
    for (double alpha : config.alpha_list) run(nu, alpha, set.table_n);
  for (long n : config.n_list)
    for (double nu : config.nu_list) run(nu, set.table_alpha, n);
  return set;
}

}  // namespace qqvar
