// Command-line driver: simulate, oracle-compare, sweep.

#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "krylov_quench/io.hpp"

namespace kq = krylov_quench;

namespace {

// Flags are collected as strings so that they can be merged over the config
// file and parsed by the same field-level validation.
struct FlagSet {
  std::optional<std::string> config;
  std::map<std::string, std::string> values;
};

void add_common(CLI::App* cmd, FlagSet& flags) {
  cmd->set_help_flag("--help", "print this help");  // -h would shadow --h
  cmd->add_option_function<std::string>("--config", [&](const std::string& v) { flags.config = v; },
                                        "key = value configuration file");
  auto flag = [&](const std::string& name, const std::string& key, const std::string& help) {
    cmd->add_option_function<std::string>(name, [&flags, key](const std::string& v) { flags.values[key] = v; }, help);
  };
  flag("--n", "n", "number of spins (even)");
  flag("--j", "j", "energy unit J");
  flag("--h", "h", "bias field h");
  flag("--g", "g", "transverse field g");
  flag("--tmax", "tmax", "final time Jt");
  flag("--n-points", "n_points", "number of grid points");
  flag("--breakdown-threshold", "breakdown_threshold", "relative Lanczos breakdown threshold");
  flag("--out", "out", "output directory");
}

int dispatch(kq::Command command, const FlagSet& flags) {
  kq::RunConfig config;
  try {
    if (flags.config) kq::apply_config(config, kq::read_config_file(*flags.config));
    kq::apply_config(config, flags.values);
  } catch (const kq::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kq::kExitConfig;
  } catch (const kq::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kq::kExitIo;
  }
  switch (command) {
    case kq::Command::Simulate: return kq::run_simulate(config, std::cerr);
    case kq::Command::OracleCompare: return kq::run_oracle_compare(config, std::cerr);
    case kq::Command::Sweep: return kq::run_sweep(config, std::cerr);
  }
  return kq::kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LMG quench dynamics in Krylov space"};
  app.set_help_flag("--help", "print this help");
  app.require_subcommand(1);

  FlagSet sim_flags, oracle_flags, sweep_flags;

  auto* sim = app.add_subcommand("simulate", "time series, Lanczos coefficients and summary");
  add_common(sim, sim_flags);
  sim->add_flag_function("--wave", [&](std::int64_t) { sim_flags.values["wave"] = "1"; },
                         "also write |phi_k(t)| to wave.csv");

  auto* oracle = app.add_subcommand("oracle-compare", "Krylov vs direct propagation");
  add_common(oracle, oracle_flags);

  auto* sw = app.add_subcommand("sweep", "scan over an (h, g) grid");
  add_common(sw, sweep_flags);
  sw->add_option_function<std::string>("--h-values", [&](const std::string& v) { sweep_flags.values["h_values"] = v; },
                                       "h grid: a,b,c or start:stop:step");
  sw->add_option_function<std::string>("--g-values", [&](const std::string& v) { sweep_flags.values["g_values"] = v; },
                                       "g grid: a,b,c or start:stop:step");
  sw->add_option_function<std::string>("--t-avg", [&](const std::string& v) { sweep_flags.values["t_avg"] = v; },
                                       "averaging window end Jt");
  sw->add_option_function<std::string>("--workers", [&](const std::string& v) { sweep_flags.values["workers"] = v; },
                                       "worker threads (capped by KRYLOV_QUENCH_THREADS)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kq::kExitConfig;
  }

  if (sim->parsed()) return dispatch(kq::Command::Simulate, sim_flags);
  if (oracle->parsed()) return dispatch(kq::Command::OracleCompare, oracle_flags);
  return dispatch(kq::Command::Sweep, sweep_flags);
}
