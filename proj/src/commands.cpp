#include "qqvar/commands.hpp"

#include <cstdlib>
#include <exception>
#include <functional>
#include <ostream>
#include <sstream>

#include "qqvar/bounds.hpp"
#include "qqvar/config.hpp"
#include "qqvar/decomposition.hpp"
#include "qqvar/empirical.hpp"
#include "qqvar/errors.hpp"
#include "qqvar/montecarlo.hpp"
#include "qqvar/report.hpp"

namespace qqvar::cli {

namespace {

int guarded(std::ostream& log, const std::function<void()>& body) {
  try {
    body();
    return kOk;
  } catch (const ConfigError& e) {
    log << "error: malformed configuration: " << e.what() << '\n';
    return kBadConfig;
  } catch (const ArgumentError& e) {
    log << "error: invalid argument: " << e.what() << '\n';
    return kBadConfig;
  } catch (const IoError& e) {
    log << "error: I/O failure: " << e.what() << '\n';
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    log << "error: I/O failure: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    log << "error: numerical failure: " << e.what() << '\n';
    return kNumerical;
  }
}

SimConfig load_run_config(const RunOptions& opts) {
  if (opts.config.empty()) throw ConfigError("no config file given (--config)");
  SimConfig cfg = load_config(opts.config);
  if (opts.seed) cfg.master_seed = *opts.seed;
  return cfg;
}

std::filesystem::path prepare_out_dir(const RunOptions& opts) {
  const auto dir = resolve_out_dir(opts.out);
  std::filesystem::create_directories(dir);
  return dir;
}

RunManifest start_manifest(const char* command, const SimConfig& cfg, const RunOptions& opts) {
  RunManifest m;
  m.command = command;
  m.config_text = echo_config(cfg);
  m.master_seed = cfg.master_seed;
  m.threads = opts.threads;
  m.extended = opts.extended;
  m.synthetic = opts.synthetic;
  m.started_at = utc_timestamp();
  return m;
}

template <typename Writer>
void emit(const std::filesystem::path& dir, const char* name, RunManifest& manifest, Writer&& write) {
  std::ostringstream buf;
  write(buf);
  write_file(dir / name, buf.str());
  manifest.outputs.emplace_back(name);
}

void finish_manifest(const std::filesystem::path& dir, RunManifest& manifest) {
  manifest.finished_at = utc_timestamp();
  write_file(dir / "manifest.json", manifest.to_json().dump(2) + "\n");
}

MvtModel<double> build_model(const ModelOptions& m) {
  auto model = MvtModel<double>::equicorrelated(m.p, m.rho, m.nu);
  if (m.mu.empty()) return model;
  if (static_cast<int>(m.mu.size()) != m.p) throw ArgumentError("mu length does not match p");
  return MvtModel<double>(Eigen::Map<const Eigen::VectorXd>(m.mu.data(), m.p), model.sigma(), m.nu);
}

Eigen::VectorXd weights_or_equal(const std::vector<double>& w, int p) {
  if (w.empty()) return Eigen::VectorXd::Constant(p, 1.0 / p);
  if (static_cast<int>(w.size()) != p) throw ArgumentError("weight vector length does not match p");
  return Eigen::Map<const Eigen::VectorXd>(w.data(), p);
}

nlohmann::ordered_json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

nlohmann::ordered_json model_json(const ModelOptions& m, const MvtModel<double>& model) {
  return {{"p", m.p}, {"rho", m.rho}, {"nu", m.nu}, {"mu", vector_json(model.mu())}, {"boundary", model.boundary()}};
}

}  // namespace

std::filesystem::path resolve_out_dir(const std::filesystem::path& requested) {
  if (!requested.empty()) return requested;
  if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') return env;
  return "out";
}

int cmd_simulate(const RunOptions& opts, std::ostream& log) {
  return guarded(log, [&] {
    const SimConfig cfg = load_run_config(opts);
    const auto dir = prepare_out_dir(opts);
    auto manifest = start_manifest("simulate", cfg, opts);
    const TableSet set = reproduce_tables(cfg, opts.threads);
    emit(dir, "table1.csv", manifest, [&](std::ostream& o) { write_table1_csv(o, set, cfg); });
    emit(dir, "table2.csv", manifest, [&](std::ostream& o) { write_table2_csv(o, set, cfg); });
    emit(dir, "table_appendix.csv", manifest, [&](std::ostream& o) { write_appendix_csv(o, set, cfg); });
    emit(dir, "cells.csv", manifest, [&](std::ostream& o) { write_cells_csv(o, set.cells); });
    finish_manifest(dir, manifest);
    log << "simulate: " << set.cells.size() << " cells, m = " << cfg.m << ", written to " << dir.string() << '\n';
  });
}

int cmd_rate(const RunOptions& opts, std::ostream& log) {
  return guarded(log, [&] {
    const SimConfig cfg = load_run_config(opts);
    const auto dir = prepare_out_dir(opts);
    auto manifest = start_manifest("rate", cfg, opts);
    std::vector<long> sizes = cfg.rate_n;
    if (opts.extended && std::find(sizes.begin(), sizes.end(), cfg.rate_n_extended) == sizes.end()) sizes.push_back(cfg.rate_n_extended);
    const double alpha = cfg.resolved_table_alpha();

    std::vector<RateFit> fits;
    std::vector<McCellSummary> all_cells;
    for (double nu : cfg.nu_list) {
      std::vector<McCellSummary> cells;
      for (long n : sizes) {
        if (opts.synthetic) {
          McCellSummary c;
          c.nu = nu;
          c.alpha = alpha;
          c.n = n;
          c.m = cfg.rate_m;
          c.mean_abs_d3 = std::pow(static_cast<double>(n), -0.75);
          c.boundary_flag = nu <= 2;
          cells.push_back(c);
        } else {
          cells.push_back(run_cell(cfg, {nu, alpha, n}, cfg.rate_m, cfg.master_seed, opts.threads));
        }
      }
      fits.push_back(rate_regression(cells));
      all_cells.insert(all_cells.end(), cells.begin(), cells.end());
      log << "rate: nu = " << format_shortest(nu) << " slope = " << format_shortest(fits.back().slope)
          << " intercept = " << format_shortest(fits.back().intercept) << " R^2 = " << format_shortest(fits.back().r_squared) << '\n';
    }
    emit(dir, "rate.csv", manifest, [&](std::ostream& o) { write_rate_csv(o, fits); });
    emit(dir, "rate_points.csv", manifest, [&](std::ostream& o) { write_rate_points_csv(o, all_cells); });
    nlohmann::ordered_json fit_json = nlohmann::ordered_json::array();
    for (const auto& f : fits) fit_json.push_back(to_json(f));
    manifest.extra["fits"] = fit_json;
    finish_manifest(dir, manifest);
  });
}

int cmd_bounds(const RunOptions& opts, std::ostream& log) {
  return guarded(log, [&] {
    const SimConfig cfg = load_run_config(opts);
    const auto dir = prepare_out_dir(opts);
    auto manifest = start_manifest("bounds", cfg, opts);
    const auto model = cfg.model(cfg.bounds_nu);
    const Eigen::VectorXd w0 = cfg.reference_weights();
    const double q0 = population_quantile(model, w0, cfg.bounds_alpha);
    const std::uint64_t seed = cfg.master_seed;

    const double e_norm_r = mean_return_norm(sample_mvt(model, cfg.bounds_n_mc, derive_seed(seed, {0})));
    double constant = cfg.bounds_constant;
    const bool fitted = std::isnan(constant);
    if (fitted) {
      const auto calibration = perturbation_grid<double>(w0, q0, cfg.bounds_calibration_grid, cfg.bounds_radius, derive_seed(seed, {1}));
      constant = fit_constant(cfg.bounds_kind, model, w0, q0, calibration, e_norm_r, cfg.bounds_safety);
    }
    const auto grid = perturbation_grid<double>(w0, q0, cfg.bounds_grid, cfg.bounds_radius, derive_seed(seed, {2}));
    const auto reports = verify_bound(model, w0, q0, grid, constant, cfg.bounds_kind, cfg.bounds_n_mc, derive_seed(seed, {3}), e_norm_r, true);

    long violations = 0;
    long slab = 0;
    for (const auto& r : reports) {
      violations += r.violation ? 1 : 0;
      slab += r.slab_violations;
    }
    emit(dir, "bounds.csv", manifest, [&](std::ostream& o) { write_bounds_csv(o, reports); });
    manifest.extra = {{"kind", std::string(to_string(cfg.bounds_kind))}, {"constant", constant},     {"constant_fitted", fitted},
                      {"e_norm_r", e_norm_r},                            {"q0", q0},                 {"violations", violations},
                      {"slab_violations", slab},                         {"grid_points", reports.size()}};
    finish_manifest(dir, manifest);
    log << "bounds: kind = " << to_string(cfg.bounds_kind) << " constant = " << format_shortest(constant) << (fitted ? " (fitted)" : "")
        << ", " << violations << " violations over " << reports.size() << " points\n";
  });
}

int cmd_decompose(const DecomposeOptions& opts, std::ostream& out, std::ostream& log) {
  return guarded(log, [&] {
    if (opts.n < 1) throw ArgumentError("n must be at least 1");
    const auto model = build_model(opts.model);
    const Eigen::VectorXd w0 = weights_or_equal(opts.w0, opts.model.p);
    Eigen::VectorXd w_hat;
    std::string source;
    if (opts.same_weights) {
      w_hat = w0;
      source = "same";
    } else if (!opts.w_hat.empty()) {
      w_hat = weights_or_equal(opts.w_hat, opts.model.p);
      source = "given";
    } else {
      w_hat = perturb_weights(w0, opts.n, derive_seed(opts.seed, {0}));
      source = "perturbed";
    }
    const auto sample = sample_mvt(model, opts.n, derive_seed(opts.seed, {1}));
    const auto dec = compute(model, sample, w0, w_hat, opts.alpha);
    nlohmann::ordered_json j;
    j["version"] = kVersion;
    j["model"] = model_json(opts.model, model);
    j["alpha"] = opts.alpha;
    j["n"] = opts.n;
    j["seed"] = opts.seed;
    j["quantile_convention"] = kQuantileConvention;
    j["w0"] = vector_json(w0);
    j["w_hat"] = vector_json(w_hat);
    j["w_hat_source"] = source;
    j["decomposition"] = to_json(dec);
    out << j.dump(2) << '\n';
  });
}

int cmd_ci(const CiOptions& opts, std::ostream& out, std::ostream& log) {
  return guarded(log, [&] {
    if (opts.n < 2) throw ArgumentError("n must be at least 2");
    const auto model = build_model(opts.model);
    const Eigen::VectorXd w = weights_or_equal(opts.w, opts.model.p);
    const auto law = project_loss(model, w);
    const double q_alpha = t_quantile(law, opts.alpha);
    const auto sample = sample_mvt(model, opts.n, derive_seed(opts.seed, {1}));
    const ProjectedLosses<double> losses(sample, w);
    const double q_hat = losses.quantile(opts.alpha);
    const double at = opts.at_q_hat ? q_hat : q_alpha;
    const double density = opts.method == DensityMethod::analytic ? t_pdf(law, at) : kernel_density_at<double>(losses.sorted(), at);
    const auto ci = confidence_interval(q_hat, opts.alpha, opts.gamma, opts.n, density, opts.method);
    nlohmann::ordered_json j;
    j["version"] = kVersion;
    j["model"] = model_json(opts.model, model);
    j["w"] = vector_json(w);
    j["alpha"] = opts.alpha;
    j["n"] = opts.n;
    j["seed"] = opts.seed;
    j["quantile_convention"] = kQuantileConvention;
    j["density_point"] = opts.at_q_hat ? "q_hat" : "q_alpha";
    j["q_alpha"] = q_alpha;
    j["ci"] = to_json(ci);
    j["covers_q_alpha"] = ci.contains(q_alpha);
    out << j.dump(2) << '\n';
  });
}

}  // namespace qqvar::cli
