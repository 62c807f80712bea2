#include "qqvar/report.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <ostream>

#include "qqvar/errors.hpp"

namespace qqvar {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string format_shortest(double x) {
  char buf[40];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return ec == std::errc() ? std::string(buf, ptr) : format_number(x);
}

namespace {

const char* yes_no(bool b) { return b ? "1" : "0"; }

std::string alpha_label(double a) { return format_shortest(a); }

}  // namespace

void write_cells_csv(std::ostream& out, const std::vector<McCellSummary>& cells) {
  out << "nu,alpha,n,m,boundary,mean_abs_d1,mcse_d1,mean_abs_d2,mcse_d2,mean_abs_d3,mcse_d3,rel_contribution_d3,weight_resamples\n";
  for (const auto& c : cells) {
    out << format_number(c.nu) << ',' << format_number(c.alpha) << ',' << c.n << ',' << c.m << ',' << yes_no(c.boundary_flag) << ','
        << format_number(c.mean_abs_d1) << ',' << format_number(c.mcse_d1) << ',' << format_number(c.mean_abs_d2) << ','
        << format_number(c.mcse_d2) << ',' << format_number(c.mean_abs_d3) << ',' << format_number(c.mcse_d3) << ','
        << format_number(c.rel_contribution_d3) << ',' << c.weight_resamples << '\n';
  }
}

void write_table1_csv(std::ostream& out, const TableSet& set, const SimConfig& config) {
  out << "nu,boundary,n,alpha,m,mean_abs_d1,mean_abs_d2,mean_abs_d3,rel_contribution_d3\n";
  for (double nu : config.nu_list) {
    const auto* c = set.find(nu, set.table_alpha, set.table_n);
    if (c == nullptr) continue;
    out << format_number(nu) << ',' << yes_no(c->boundary_flag) << ',' << c->n << ',' << format_number(c->alpha) << ',' << c->m << ','
        << format_number(c->mean_abs_d1) << ',' << format_number(c->mean_abs_d2) << ',' << format_number(c->mean_abs_d3) << ','
        << format_number(c->rel_contribution_d3) << '\n';
  }
}

void write_table2_csv(std::ostream& out, const TableSet& set, const SimConfig& config) {
  out << "nu,boundary,n,m";
  for (double a : config.alpha_list) out << ",mean_abs_d3_alpha_" << alpha_label(a);
  out << '\n';
  for (double nu : config.nu_list) {
    const auto* first = set.find(nu, config.alpha_list.front(), set.table_n);
    if (first == nullptr) continue;
    out << format_number(nu) << ',' << yes_no(first->boundary_flag) << ',' << set.table_n << ',' << first->m;
    for (double a : config.alpha_list) {
      const auto* c = set.find(nu, a, set.table_n);
      out << ',' << (c ? format_number(c->mean_abs_d3) : std::string("nan"));
    }
    out << '\n';
  }
}

void write_appendix_csv(std::ostream& out, const TableSet& set, const SimConfig& config) {
  out << "n,nu,boundary,alpha,m,mean_abs_d1,mcse_d1,mean_abs_d2,mcse_d2,mean_abs_d3,mcse_d3,rel_contribution_d3\n";
  for (long n : config.n_list) {
    for (double nu : config.nu_list) {
      const auto* c = set.find(nu, set.table_alpha, n);
      if (c == nullptr) continue;
      out << n << ',' << format_number(nu) << ',' << yes_no(c->boundary_flag) << ',' << format_number(c->alpha) << ',' << c->m << ','
          << format_number(c->mean_abs_d1) << ',' << format_number(c->mcse_d1) << ',' << format_number(c->mean_abs_d2) << ','
          << format_number(c->mcse_d2) << ',' << format_number(c->mean_abs_d3) << ',' << format_number(c->mcse_d3) << ','
          << format_number(c->rel_contribution_d3) << '\n';
    }
  }
}

void write_rate_csv(std::ostream& out, const std::vector<RateFit>& fits) {
  out << "nu,alpha,slope,intercept,r_squared,points\n";
  for (const auto& f : fits) {
    out << format_number(f.nu) << ',' << format_number(f.alpha) << ',' << format_number(f.slope) << ',' << format_number(f.intercept) << ','
        << format_number(f.r_squared) << ',' << f.points.size() << '\n';
  }
}

void write_rate_points_csv(std::ostream& out, const std::vector<McCellSummary>& cells) {
  out << "nu,alpha,n,m,mean_abs_d3,mcse_d3,log_n,log_mean_abs_d3\n";
  for (const auto& c : cells) {
    out << format_number(c.nu) << ',' << format_number(c.alpha) << ',' << c.n << ',' << c.m << ',' << format_number(c.mean_abs_d3) << ','
        << format_number(c.mcse_d3) << ',' << format_number(std::log(static_cast<double>(c.n))) << ','
        << format_number(std::log(c.mean_abs_d3)) << '\n';
  }
}

void write_bounds_csv(std::ostream& out, const std::vector<BoundReport<double>>& reports) {
  out << "index,kind,weight_shift,threshold_shift,mu_term,sigma_term,e_norm_r,constant,bound,observed,mcse,exact,slack,violation,slab_violations,t,q0";
  const Eigen::Index p = reports.empty() ? 0 : reports.front().w.size();
  for (Eigen::Index k = 0; k < p; ++k) out << ",w" << (k + 1);
  out << '\n';
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    out << i << ',' << to_string(r.kind) << ',' << format_number(r.weight_shift) << ',' << format_number(r.threshold_shift) << ','
        << format_number(r.mu_term) << ',' << format_number(r.sigma_term) << ',' << format_number(r.e_norm_r) << ','
        << format_number(r.constant_used) << ',' << format_number(r.bound_value) << ',' << format_number(r.observed) << ','
        << format_number(r.mcse) << ',' << format_number(r.exact) << ',' << format_number(r.slack) << ',' << yes_no(r.violation) << ','
        << r.slab_violations << ',' << format_number(r.t) << ',' << format_number(r.q0);
    for (Eigen::Index k = 0; k < r.w.size(); ++k) out << ',' << format_number(r.w(k));
    out << '\n';
  }
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

nlohmann::ordered_json to_json(const QQDecomposition<double>& d) {
  return {{"d1", d.d1},
          {"d2", d.d2},
          {"d3", d.d3},
          {"total", d.total},
          {"q0", d.q0},
          {"q_alpha_what", d.q_alpha_what},
          {"q_hat", d.q_hat},
          {"density_at_quantile", d.density_at_quantile},
          {"ecdf_at_quantile", d.ecdf_at_quantile}};
}

nlohmann::ordered_json to_json(const QuantileCI<double>& ci) {
  return {{"center", ci.center},       {"half_width", ci.half_width}, {"lower", ci.lower()},
          {"upper", ci.upper()},       {"gamma", ci.gamma},           {"z", ci.z},
          {"density_used", ci.density_used}, {"density_method", std::string(to_string(ci.density_method))}};
}

nlohmann::ordered_json to_json(const McCellSummary& s) {
  return {{"nu", s.nu},
          {"alpha", s.alpha},
          {"n", s.n},
          {"m", s.m},
          {"boundary", s.boundary_flag},
          {"mean_abs_d1", s.mean_abs_d1},
          {"mean_abs_d2", s.mean_abs_d2},
          {"mean_abs_d3", s.mean_abs_d3},
          {"mcse_d1", s.mcse_d1},
          {"mcse_d2", s.mcse_d2},
          {"mcse_d3", s.mcse_d3},
          {"rel_contribution_d3", s.rel_contribution_d3},
          {"weight_resamples", s.weight_resamples}};
}

nlohmann::ordered_json to_json(const RateFit& f) {
  nlohmann::ordered_json pts = nlohmann::ordered_json::array();
  for (const auto& [x, y] : f.points) pts.push_back({x, y});
  return {{"nu", f.nu}, {"alpha", f.alpha}, {"slope", f.slope}, {"intercept", f.intercept}, {"r_squared", f.r_squared}, {"points", pts}};
}

nlohmann::ordered_json RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["tool"] = "qqvar";
  j["version"] = kVersion;
  j["command"] = command;
  j["master_seed"] = master_seed;
  j["threads"] = threads;
  j["extended"] = extended;
  j["synthetic"] = synthetic;
  j["quantile_convention"] = kQuantileConvention;
  j["rel_contribution_formula"] = kRelContributionFormula;
  j["seeding"] = "replication seed = derive_seed(master_seed, {bits(nu), bits(alpha), n, j}); substreams 0 = weights, 1 = sample";
  j["config_text"] = config_text;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  j["outputs"] = outputs;
  if (!extra.empty()) j["extra"] = extra;
  return j;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace qqvar
