#pragma once

// CSV and JSON emission. CSV numbers carry 17 significant digits so every double
// round-trips; rounding for display is left to the consumer.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "qqvar/bounds.hpp"
#include "qqvar/decomposition.hpp"
#include "qqvar/inference.hpp"
#include "qqvar/montecarlo.hpp"

namespace qqvar {

inline constexpr const char* kVersion = "1.0.0";

std::string format_number(double x);   ///< %.17g
std::string format_shortest(double x); ///< shortest round-trip form

void write_cells_csv(std::ostream& out, const std::vector<McCellSummary>& cells);
void write_table1_csv(std::ostream& out, const TableSet& set, const SimConfig& config);
void write_table2_csv(std::ostream& out, const TableSet& set, const SimConfig& config);
void write_appendix_csv(std::ostream& out, const TableSet& set, const SimConfig& config);
void write_rate_csv(std::ostream& out, const std::vector<RateFit>& fits);
void write_rate_points_csv(std::ostream& out, const std::vector<McCellSummary>& cells);
void write_bounds_csv(std::ostream& out, const std::vector<BoundReport<double>>& reports);

/// Writes `content` to `path`, throwing IoError on failure.
void write_file(const std::filesystem::path& path, const std::string& content);

nlohmann::ordered_json to_json(const QQDecomposition<double>& d);
nlohmann::ordered_json to_json(const QuantileCI<double>& ci);
nlohmann::ordered_json to_json(const McCellSummary& s);
nlohmann::ordered_json to_json(const RateFit& f);

/// Everything needed to rerun a command and reproduce its files byte for byte.
struct RunManifest {
  std::string command;
  std::string config_text;
  std::uint64_t master_seed = 0;
  int threads = 1;
  bool extended = false;
  bool synthetic = false;
  std::string started_at;
  std::string finished_at;
  std::vector<std::string> outputs;
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();

  nlohmann::ordered_json to_json() const;
};

std::string utc_timestamp();

}  // namespace qqvar
