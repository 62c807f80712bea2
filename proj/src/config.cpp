#include "qqvar/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "json.hpp"
#include "qqvar/errors.hpp"
#include "qqvar/report.hpp"

namespace qqvar {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_list(std::string_view v) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = v.find(',', start);
    out.push_back(trim(v.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double to_double(std::string_view key, std::string_view v) {
  double x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(x))
    throw ConfigError("key '" + std::string(key) + "': '" + std::string(v) + "' is not a number");
  return x;
}

// Integers may be written in exponent form (1e4).
long to_long(std::string_view key, std::string_view v) {
  const double x = to_double(key, v);
  if (x != std::floor(x) || std::abs(x) > 9.0e15) throw ConfigError("key '" + std::string(key) + "': '" + std::string(v) + "' is not an integer");
  return static_cast<long>(x);
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  std::uint64_t x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError("key '" + std::string(key) + "': '" + std::string(v) + "' is not an unsigned integer");
  return x;
}

template <typename T, typename F>
std::vector<T> to_list(std::string_view key, std::string_view v, F&& conv) {
  std::vector<T> out;
  for (auto item : split_list(v)) {
    if (item.empty()) throw ConfigError("key '" + std::string(key) + "': empty list element");
    out.push_back(conv(key, item));
  }
  return out;
}

using Setter = std::function<void(SimConfig&, std::string_view key, std::string_view value)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"p", [](SimConfig& c, auto k, auto v) { c.p = static_cast<int>(to_long(k, v)); }},
      {"rho", [](SimConfig& c, auto k, auto v) { c.rho = to_double(k, v); }},
      {"nu", [](SimConfig& c, auto k, auto v) { c.nu_list = to_list<double>(k, v, to_double); }},
      {"alpha", [](SimConfig& c, auto k, auto v) { c.alpha_list = to_list<double>(k, v, to_double); }},
      {"n", [](SimConfig& c, auto k, auto v) { c.n_list = to_list<long>(k, v, to_long); }},
      {"m", [](SimConfig& c, auto k, auto v) { c.m = to_long(k, v); }},
      {"master_seed", [](SimConfig& c, auto k, auto v) { c.master_seed = to_u64(k, v); }},
      {"w0",
       [](SimConfig& c, auto k, auto v) {
         const auto xs = to_list<double>(k, v, to_double);
         c.w0 = Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
       }},
      {"table_n", [](SimConfig& c, auto k, auto v) { c.table_n = to_long(k, v); }},
      {"table_alpha", [](SimConfig& c, auto k, auto v) { c.table_alpha = to_double(k, v); }},
      {"rate_n", [](SimConfig& c, auto k, auto v) { c.rate_n = to_list<long>(k, v, to_long); }},
      {"rate_m", [](SimConfig& c, auto k, auto v) { c.rate_m = to_long(k, v); }},
      {"rate_n_extended", [](SimConfig& c, auto k, auto v) { c.rate_n_extended = to_long(k, v); }},
      {"bounds_kind",
       [](SimConfig& c, auto k, auto v) {
         if (v == "t_model")
           c.bounds_kind = BoundKind::t_model;
         else if (v == "generic")
           c.bounds_kind = BoundKind::generic;
         else
           throw ConfigError("key '" + std::string(k) + "': expected t_model or generic");
       }},
      {"bounds_constant",
       [](SimConfig& c, auto k, auto v) { c.bounds_constant = v == "fit" ? std::numeric_limits<double>::quiet_NaN() : to_double(k, v); }},
      {"bounds_safety", [](SimConfig& c, auto k, auto v) { c.bounds_safety = to_double(k, v); }},
      {"bounds_radius", [](SimConfig& c, auto k, auto v) { c.bounds_radius = to_double(k, v); }},
      {"bounds_grid", [](SimConfig& c, auto k, auto v) { c.bounds_grid = static_cast<int>(to_long(k, v)); }},
      {"bounds_calibration_grid", [](SimConfig& c, auto k, auto v) { c.bounds_calibration_grid = static_cast<int>(to_long(k, v)); }},
      {"bounds_n_mc", [](SimConfig& c, auto k, auto v) { c.bounds_n_mc = to_long(k, v); }},
      {"bounds_nu", [](SimConfig& c, auto k, auto v) { c.bounds_nu = to_double(k, v); }},
      {"bounds_alpha", [](SimConfig& c, auto k, auto v) { c.bounds_alpha = to_double(k, v); }},
  };
  return table;
}

}  // namespace

SimConfig parse_config(std::string_view text) {
  SimConfig config;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
    if (!seen.insert(std::string(key)).second) throw ConfigError("line " + std::to_string(line_no) + ": repeated key '" + std::string(key) + "'");
    if (value.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty value for '" + std::string(key) + "'");
    it->second(config, key, value);
  }
  config.validate();
  return config;
}

SimConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (path.extension() == ".json") {
    nlohmann::json manifest;
    try {
      manifest = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("manifest is not valid JSON: ") + e.what());
    }
    if (!manifest.contains("config_text") || !manifest["config_text"].is_string()) throw ConfigError("manifest has no config_text");
    return parse_config(manifest["config_text"].get<std::string>());
  }
  return parse_config(text);
}

std::string echo_config(const SimConfig& c) {
  auto list = [](const auto& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i) s += ", ";
      if constexpr (std::is_floating_point_v<std::decay_t<decltype(xs[i])>>)
        s += format_shortest(xs[i]);
      else
        s += std::to_string(xs[i]);
    }
    return s;
  };
  std::ostringstream out;
  out << "p = " << c.p << '\n';
  out << "rho = " << format_shortest(c.rho) << '\n';
  out << "nu = " << list(c.nu_list) << '\n';
  out << "alpha = " << list(c.alpha_list) << '\n';
  out << "n = " << list(c.n_list) << '\n';
  out << "m = " << c.m << '\n';
  out << "master_seed = " << c.master_seed << '\n';
  if (c.w0.size() != 0) out << "w0 = " << list(std::vector<double>(c.w0.data(), c.w0.data() + c.w0.size())) << '\n';
  out << "table_n = " << c.table_n << '\n';
  out << "table_alpha = " << format_shortest(c.table_alpha) << '\n';
  out << "rate_n = " << list(c.rate_n) << '\n';
  out << "rate_m = " << c.rate_m << '\n';
  out << "rate_n_extended = " << c.rate_n_extended << '\n';
  out << "bounds_kind = " << to_string(c.bounds_kind) << '\n';
  out << "bounds_constant = " << (std::isnan(c.bounds_constant) ? std::string("fit") : format_shortest(c.bounds_constant)) << '\n';
  out << "bounds_safety = " << format_shortest(c.bounds_safety) << '\n';
  out << "bounds_radius = " << format_shortest(c.bounds_radius) << '\n';
  out << "bounds_grid = " << c.bounds_grid << '\n';
  out << "bounds_calibration_grid = " << c.bounds_calibration_grid << '\n';
  out << "bounds_n_mc = " << c.bounds_n_mc << '\n';
  out << "bounds_nu = " << format_shortest(c.bounds_nu) << '\n';
  out << "bounds_alpha = " << format_shortest(c.bounds_alpha) << '\n';
  return out.str();
}

}  // namespace qqvar
