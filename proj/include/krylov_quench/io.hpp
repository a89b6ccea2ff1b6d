#pragma once

// Run configuration, CSV/JSON export, and the command drivers used by the
// command-line tool.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "krylov_quench/analysis.hpp"
#include "krylov_quench/krylov.hpp"
#include "krylov_quench/propagator.hpp"

namespace krylov_quench {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitIo = 2, kExitOracle = 3 };

struct ConfigError : std::runtime_error {
  ConfigError(const std::string& field, const std::string& message)
      : std::runtime_error(field + ": " + message), field(field) {}
  std::string field;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  int n = 400;
  double j = 1.0;
  double h = 0.5;
  double g = 1.0;
  double t_max = 10.0;
  int n_points = 2001;
  double breakdown_threshold = 1e-10;
  double t_avg = 10.0;
  std::vector<double> h_values;
  std::vector<double> g_values;
  std::filesystem::path out_dir = ".";
  int workers = 1;
  bool write_wave = false;

  ModelParams model() const;
  std::vector<double> times() const;
};

/// key = value lines; '#' starts a comment.  Throws ConfigError on
/// malformed lines and IoError when the file cannot be read.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

/// Applies known keys; unknown keys and unparsable values throw ConfigError.
void apply_config(RunConfig& config, const std::map<std::string, std::string>& values);

/// Grid syntax: "a,b,c" or "start:stop:step" (inclusive of stop).
std::vector<double> parse_grid(const std::string& text);

enum class Command { Simulate, OracleCompare, Sweep };

/// Throws ConfigError naming the first offending field.
void validate(const RunConfig& config, Command command);

/// 17 significant digits, round-trip exact.
std::string format_double(double x);

void write_series_csv(std::ostream& out, const ObservableSeries& series);
void write_lanczos_csv(std::ostream& out, const TridiagonalHamiltonian& tridiag);
void write_wave_csv(std::ostream& out, const std::vector<double>& times,
                    const std::vector<std::vector<double>>& wave_abs);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRecord>& records);

nlohmann::json summary_json(const Simulation& sim, const DqptReport& dqpt);
nlohmann::json sweep_json(const std::vector<SweepRecord>& records);

/// Command drivers.  Return an ExitCode; diagnostics go to `log`.
int run_simulate(const RunConfig& config, std::ostream& log);
int run_oracle_compare(const RunConfig& config, std::ostream& log);
int run_sweep(const RunConfig& config, std::ostream& log);

}  // namespace krylov_quench
