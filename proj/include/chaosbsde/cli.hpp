#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "chaosbsde/problems.hpp"
#include "chaosbsde/schemes.hpp"

namespace chaosbsde::cli {

inline constexpr int kSchemaVersion = 1;

/// Bad configuration; the message names the offending key or location.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string scheme = "euler";
  ProblemConfig problem;
  int m = 20;
  int M = 10;
  int P = 3;
  std::uint64_t N = 100000;
  int Q = 7;
  std::uint64_t seed = 1;
  int repetitions = 1;
  std::string sweep_axis;  // m | M | P | N
  std::vector<std::int64_t> sweep_values;
  std::string out;
  bool retain = false;
  bool variance = true;
  std::uint64_t paths = 10;
  int threads = 0;
  std::uint64_t oracle_N = 1000000;
  double bump = 0.01;
};

/// Validates a flat JSON object; `source` prefixes error messages.
RunConfig parse_config(const nlohmann::json& j, const std::string& source = "config");
RunConfig load_config(const std::string& path);
nlohmann::json config_to_json(const RunConfig& cfg);
/// Applies key=value (value parsed as JSON, falling back to a string).
void apply_override(RunConfig& cfg, const std::string& assignment);

struct ResultRow {
  int schema = kSchemaVersion;
  std::string scheme;
  std::string problem;
  int m = 0, M = 0, P = 0;
  std::uint64_t N = 0;
  int Q = 0;
  std::uint64_t seed = 0;
  int run = 0;
  double y0 = 0.0;
  std::vector<double> z0;
  double wall_ms = 0.0;
};

std::string csv_header(int dims);
std::string format_row(const ResultRow& row);
/// Inverse of format_row; throws ConfigError on malformed input.
ResultRow parse_row(const std::string& line);
/// Row without its wall-clock column (the part that is reproducible).
std::string numeric_part(const std::string& line);

/// Config reproducing a row given the config it came from.
RunConfig config_for_row(const RunConfig& base, const ResultRow& row);

/// One scheme run with the config's seed.
ResultRow execute(const RunConfig& cfg, int run_index);

std::vector<ResultRow> cmd_run(const RunConfig& cfg);
/// Runs r = 0..R-1 with seed + r.
std::vector<ResultRow> cmd_repeat(const RunConfig& cfg);
/// One row per (axis value, repetition).
std::vector<ResultRow> cmd_sweep(const RunConfig& cfg);
TrajectoryTable cmd_paths(const RunConfig& cfg);

void write_rows(std::ostream& os, const std::vector<ResultRow>& rows);
void write_paths(std::ostream& os, const TrajectoryTable& table);

/// Full command-line entry point; returns the process exit code.
int main_entry(int argc, char** argv);

}  // namespace chaosbsde::cli
