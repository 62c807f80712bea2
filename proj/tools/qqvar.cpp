// qqvar: command-line front end for the Q-Q decomposition library.

#include <iostream>

#include "CLI11.hpp"
#include "qqvar/commands.hpp"

namespace {

void add_run_flags(CLI::App* cmd, qqvar::cli::RunOptions& opts) {
  cmd->add_option("--config", opts.config, "Config file, or a manifest.json from an earlier run")->required();
  cmd->add_option("--out", opts.out, "Output directory (default: $QQVAR_OUT_DIR or ./out)");
  cmd->add_option("--seed", opts.seed, "Override master_seed");
  cmd->add_option("--threads", opts.threads, "Worker threads; results do not depend on it")->check(CLI::PositiveNumber);
}

void add_model_flags(CLI::App* cmd, qqvar::cli::ModelOptions& m) {
  cmd->add_option("--p", m.p, "Dimension")->check(CLI::PositiveNumber);
  cmd->add_option("--rho", m.rho, "Equicorrelation of the scatter matrix");
  cmd->add_option("--nu", m.nu, "Degrees of freedom");
  cmd->add_option("--mu", m.mu, "Location vector (default zero)")->delimiter(',');
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Q-Q orthogonality decomposition of projected-quantile VaR error under multivariate Student t returns"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "qqvar 1.0.0");

  qqvar::cli::RunOptions simulate_opts;
  auto* simulate = app.add_subcommand("simulate", "Run the Monte Carlo tables");
  add_run_flags(simulate, simulate_opts);

  qqvar::cli::RunOptions rate_opts;
  auto* rate = app.add_subcommand("rate", "Fit the log-log decay rate of mean |D3|");
  add_run_flags(rate, rate_opts);
  rate->add_flag("--extended", rate_opts.extended, "Add the rate_n_extended sample size (default 1e6)");
  rate->add_flag("--synthetic", rate_opts.synthetic, "Fit an injected exact n^-0.75 power law instead of simulating");

  qqvar::cli::RunOptions bounds_opts;
  auto* bounds = app.add_subcommand("bounds", "Verify symmetric-difference bounds on a perturbation grid");
  add_run_flags(bounds, bounds_opts);

  qqvar::cli::DecomposeOptions dec_opts;
  auto* decompose = app.add_subcommand("decompose", "One decomposition with all intermediate quantities, as JSON");
  add_model_flags(decompose, dec_opts.model);
  decompose->add_option("--w0", dec_opts.w0, "Reference weights (default equal)")->delimiter(',');
  auto* what = decompose->add_option("--w-hat", dec_opts.w_hat, "Estimated weights (default: perturb w0 using --seed)")->delimiter(',');
  decompose->add_flag("--same-weights", dec_opts.same_weights, "Use w_hat = w0")->excludes(what);
  decompose->add_option("--alpha", dec_opts.alpha, "Quantile level");
  decompose->add_option("--n", dec_opts.n, "Sample size");
  decompose->add_option("--seed", dec_opts.seed, "Seed for the sample and the perturbation");

  qqvar::cli::CiOptions ci_opts;
  auto* ci = app.add_subcommand("ci", "Bahadur confidence interval for a projected quantile, as JSON");
  add_model_flags(ci, ci_opts.model);
  ci->add_option("--w", ci_opts.w, "Weights (default equal)")->delimiter(',');
  ci->add_option("--alpha", ci_opts.alpha, "Quantile level");
  ci->add_option("--gamma", ci_opts.gamma, "One minus the coverage level");
  ci->add_option("--n", ci_opts.n, "Sample size");
  ci->add_option("--seed", ci_opts.seed, "Sample seed");
  std::string method = "analytic";
  ci->add_option("--method", method, "Density plug-in: analytic or kernel")->check(CLI::IsMember({"analytic", "kernel"}));
  ci->add_flag("--at-q-hat", ci_opts.at_q_hat, "Evaluate the density at the empirical quantile");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : qqvar::cli::kBadConfig;
  }

  if (simulate->parsed()) return qqvar::cli::cmd_simulate(simulate_opts, std::cerr);
  if (rate->parsed()) return qqvar::cli::cmd_rate(rate_opts, std::cerr);
  if (bounds->parsed()) return qqvar::cli::cmd_bounds(bounds_opts, std::cerr);
  if (decompose->parsed()) return qqvar::cli::cmd_decompose(dec_opts, std::cout, std::cerr);
  ci_opts.method = method == "kernel" ? qqvar::DensityMethod::kernel : qqvar::DensityMethod::analytic;
  if (ci->parsed()) return qqvar::cli::cmd_ci(ci_opts, std::cout, std::cerr);
  return qqvar::cli::kBadConfig;
}
