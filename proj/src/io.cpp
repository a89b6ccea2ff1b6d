#include "krylov_quench/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace krylov_quench {

using nlohmann::json;

ModelParams RunConfig::model() const {
  ModelParams p;
  p.n = n;
  p.j = j;
  p.h = h;
  p.g = g;
  return p;
}

std::vector<double> RunConfig::times() const { return uniform_grid(t_max, n_points); }

// ---------------------------------------------------------------------------
// Configuration

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string normalize_key(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

double parse_double(const std::string& field, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError(field, "not a number: '" + text + "'");
  }
  if (used != text.size()) throw ConfigError(field, "not a number: '" + text + "'");
  return v;
}

int parse_int(const std::string& field, const std::string& text) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(text, &used);
  } catch (const std::exception&) {
    throw ConfigError(field, "not an integer: '" + text + "'");
  }
  if (used != text.size() || v < std::numeric_limits<int>::min() ||
      v > std::numeric_limits<int>::max())
    throw ConfigError(field, "not an integer: '" + text + "'");
  return static_cast<int>(v);
}

bool parse_bool(const std::string& field, const std::string& text) {
  if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
  if (text == "0" || text == "false" || text == "no" || text == "off") return false;
  throw ConfigError(field, "not a boolean: '" + text + "'");
}

}  // namespace

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno), "expected 'key = value'");
    auto key = normalize_key(trim(line.substr(0, eq)));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno), "empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

std::vector<double> parse_grid(const std::string& text) {
  const std::string s = trim(text);
  if (s.empty()) throw ConfigError("grid", "empty grid");
  std::vector<double> out;
  if (s.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    for (std::string part; std::getline(ss, part, ':');) parts.push_back(trim(part));
    if (parts.size() != 3) throw ConfigError("grid", "expected start:stop:step, got '" + s + "'");
    const double start = parse_double("grid", parts[0]);
    const double stop = parse_double("grid", parts[1]);
    const double step = parse_double("grid", parts[2]);
    if (!(step > 0.0) || !(stop >= start)) throw ConfigError("grid", "need step > 0 and stop >= start");
    const long count = std::lround(std::floor((stop - start) / step + 1e-9)) + 1;
    if (count > 1000000) throw ConfigError("grid", "too many points");
    // start + i*step rather than accumulation, so 0.1:3.0:0.1 ends at 3.0.
    for (long i = 0; i < count; ++i) out.push_back(start + static_cast<double>(i) * step);
  } else {
    std::stringstream ss(s);
    for (std::string part; std::getline(ss, part, ',');) out.push_back(parse_double("grid", trim(part)));
  }
  return out;
}

void apply_config(RunConfig& c, const std::map<std::string, std::string>& values) {
  for (const auto& [raw_key, value] : values) {
    const auto key = normalize_key(raw_key);
    if (key == "n") c.n = parse_int(key, value);
    else if (key == "j") c.j = parse_double(key, value);
    else if (key == "h") c.h = parse_double(key, value);
    else if (key == "g") c.g = parse_double(key, value);
    else if (key == "tmax" || key == "t_max") c.t_max = parse_double("tmax", value);
    else if (key == "n_points" || key == "npoints") c.n_points = parse_int("n_points", value);
    else if (key == "breakdown_threshold") c.breakdown_threshold = parse_double(key, value);
    else if (key == "t_avg") c.t_avg = parse_double(key, value);
    else if (key == "h_values") {
      try { c.h_values = parse_grid(value); } catch (const ConfigError& e) { throw ConfigError(key, e.what()); }
    } else if (key == "g_values") {
      try { c.g_values = parse_grid(value); } catch (const ConfigError& e) { throw ConfigError(key, e.what()); }
    } else if (key == "out" || key == "out_dir") c.out_dir = value;
    else if (key == "workers") c.workers = parse_int(key, value);
    else if (key == "wave") c.write_wave = parse_bool(key, value);
    else throw ConfigError(key, "unknown configuration key");
  }
}

void validate(const RunConfig& c, Command command) {
  auto check_model = [&](ModelParams p) {
    try {
      p.validate();
    } catch (const std::invalid_argument& e) {
      std::string msg = e.what();
      auto colon = msg.find(':');
      throw ConfigError(msg.substr(0, colon), colon == std::string::npos ? msg : trim(msg.substr(colon + 1)));
    }
  };
  check_model(c.model());
  if (!(c.t_max > 0.0) || !std::isfinite(c.t_max)) throw ConfigError("tmax", "must be positive");
  if (c.n_points < 5) throw ConfigError("n_points", "must be >= 5");
  if (!(c.breakdown_threshold > 0.0 && c.breakdown_threshold < 1.0))
    throw ConfigError("breakdown_threshold", "must lie in (0, 1)");
  if (c.workers < 1) throw ConfigError("workers", "must be >= 1");
  if (c.out_dir.empty()) throw ConfigError("out", "empty output directory");

  if (command == Command::Sweep) {
    if (c.h_values.empty()) throw ConfigError("h_values", "sweep needs a nonempty h grid");
    if (c.g_values.empty()) throw ConfigError("g_values", "sweep needs a nonempty g grid");
    for (double h : c.h_values)
      if (!(h >= 0.0) || !std::isfinite(h)) throw ConfigError("h_values", "entries must be nonnegative");
    for (double g : c.g_values)
      if (!(g >= 0.0) || !std::isfinite(g)) throw ConfigError("g_values", "entries must be nonnegative");
    if (!(c.t_avg > 0.0) || c.t_avg > c.t_max) throw ConfigError("t_avg", "must lie in (0, tmax]");
  }
}

// ---------------------------------------------------------------------------
// Serialization

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return "0";  // no "-0"
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_series_csv(std::ostream& out, const ObservableSeries& s) {
  out << "Jt,f,K,S,Sz,Sx,abs_phi0,flags\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    out << format_double(s.times[i]) << ',' << format_double(s.f[i]) << ','
        << format_double(s.complexity[i]) << ',' << format_double(s.entropy[i]) << ','
        << format_double(s.sz[i]) << ',' << format_double(s.sx[i]) << ','
        << format_double(s.abs_phi0[i]) << ',' << s.flags[i] << '\n';
  }
}

void write_lanczos_csv(std::ostream& out, const TridiagonalHamiltonian& tridiag) {
  out << "k,a_k,b_k\n";
  for (int k = 0; k < tridiag.dimension(); ++k)
    out << k << ',' << format_double(tridiag.a[k]) << ',' << format_double(tridiag.b_at(k)) << '\n';
}

void write_wave_csv(std::ostream& out, const std::vector<double>& times,
                    const std::vector<std::vector<double>>& wave_abs) {
  if (wave_abs.size() != times.size()) throw std::invalid_argument("write_wave_csv: size mismatch");
  out << 'k';
  for (double t : times) out << ",Jt=" << format_double(t);
  out << '\n';
  const std::size_t d = wave_abs.empty() ? 0 : wave_abs.front().size();
  for (std::size_t k = 0; k < d; ++k) {
    out << k;
    for (const auto& column : wave_abs) out << ',' << format_double(column[k]);
    out << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRecord>& records) {
  out << "h,g,N,max_K,argmax_b,krylov_dim,sz_bar,sx_bar,ground_sz,ground_sx,n_dqpt,first_dqpt_Jt,"
         "has_metastable,error\n";
  for (const auto& r : records) {
    out << format_double(r.h) << ',' << format_double(r.g) << ',' << r.n << ',';
    if (!r.error.empty()) {
      // Failed point: only the identifying columns and the message.
      std::string msg = r.error;
      std::replace(msg.begin(), msg.end(), '"', '\'');
      out << ",,,,,,,,,,\"" << msg << "\"\n";
      continue;
    }
    out << format_double(r.max_k) << ',';
    if (r.argmax_b) out << *r.argmax_b;
    out << ',' << r.krylov_dim << ',' << format_double(r.sz_bar) << ',' << format_double(r.sx_bar)
        << ',' << format_double(r.ground_sz) << ',' << format_double(r.ground_sx) << ','
        << r.dqpt_times.size() << ',';
    if (!r.dqpt_times.empty()) out << format_double(r.dqpt_times.front());
    out << ',' << (r.has_metastable ? 1 : 0) << ",\n";
  }
}

namespace {

json optional_json(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }
json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json termination_json(const Termination& t) {
  json j = {{"kind", termination_name(t)}};
  if (const auto* b = std::get_if<termination::Breakdown>(&t)) {
    j["k"] = b->k;
    j["b"] = b->value;
  }
  return j;
}

}  // namespace

json summary_json(const Simulation& sim, const DqptReport& dqpt) {
  const auto& p = sim.params;
  const auto& s = sim.series;
  const auto& tri = sim.decomposition.tridiag;
  json j;
  j["params"] = {{"N", p.n}, {"J", p.j}, {"h", p.h}, {"g", p.g}};
  j["grid"] = {{"t_max", s.times.empty() ? 0.0 : s.times.back()}, {"n_points", s.size()}};
  j["krylov_dim"] = tri.dimension();
  j["basis"] = to_string(sim.decomposition.basis);
  j["termination"] = termination_json(sim.decomposition.termination);

  const auto kmax = std::max_element(s.complexity.begin(), s.complexity.end());
  j["max_K"] = *kmax;
  j["max_K_Jt"] = s.times[static_cast<std::size_t>(kmax - s.complexity.begin())];

  json cands = json::array();
  for (const auto& c : dqpt.candidates) {
    if (!c.strong) continue;
    cands.push_back({{"Jt", c.time},
                     {"sharpness", c.sharpness},
                     {"k_peak_aligned", c.k_peak_aligned},
                     {"entropy_dip_aligned", c.entropy_dip_aligned}});
  }
  j["dqpt"] = {{"strong_times", dqpt.strong_times()},
               {"strong", cands},
               {"n_candidates", dqpt.candidates.size()}};

  if (tri.dimension() >= 3) {
    const auto ds = domain_structure(tri);
    j["domain_structure"] = {{"boundary_k", optional_json(ds.boundary_k)},
                             {"k_s", optional_json(ds.k_s)},
                             {"turning_point", optional_json(ds.turning_point)}};
  }

  const auto ap = appendix_check(p);
  json appendix = {{"a0", ap.a0}, {"b1", ap.b1}, {"a1", optional_json(ap.a1)},
                   {"a0_residual", tri.a[0] - ap.a0}};
  if (tri.dimension() >= 2) {
    appendix["b1_residual"] = tri.b_at(1) - ap.b1;
    if (ap.a1) appendix["a1_residual"] = tri.a[1] - *ap.a1;
    const auto slope = slope_check(tri, p);
    j["slope"] = {{"measured", slope.measured}, {"predicted", slope.predicted}, {"residual", slope.residual}};
  }
  j["appendix"] = appendix;

  std::uint32_t flag_union = 0;
  std::size_t unresolved = 0;
  for (auto f : s.flags) {
    flag_union |= f;
    if (f & kAmplitudeUnresolved) ++unresolved;
  }
  j["rate_flags"] = {{"union", flag_union}, {"unresolved_points", unresolved}};
  return j;
}

json sweep_json(const std::vector<SweepRecord>& records) {
  json rows = json::array();
  for (const auto& r : records) {
    json row = {{"h", r.h}, {"g", r.g}, {"N", r.n}};
    if (!r.error.empty()) {
      row["error"] = r.error;
    } else {
      row.update({{"max_K", r.max_k},
                  {"argmax_b", optional_json(r.argmax_b)},
                  {"krylov_dim", r.krylov_dim},
                  {"sz_bar", r.sz_bar},
                  {"sx_bar", r.sx_bar},
                  {"ground_sz", r.ground_sz},
                  {"ground_sx", r.ground_sx},
                  {"dqpt_times", r.dqpt_times},
                  {"has_metastable", r.has_metastable}});
    }
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Commands

namespace {

void prepare_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw IoError("cannot create output directory " + dir.string());
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

template <class Body>
int guarded(std::ostream& log, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    log << "I/O error: " << e.what() << '\n';
    return kExitIo;
  }
}

}  // namespace

int run_simulate(const RunConfig& config, std::ostream& log) {
  return guarded(log, [&] {
    validate(config, Command::Simulate);
    const auto& dir = config.out_dir;
    prepare_dir(dir);
    auto series_out = open_output(dir / "series.csv");
    auto lanczos_out = open_output(dir / "lanczos.csv");
    auto summary_out = open_output(dir / "summary.json");
    std::ofstream wave_out;
    if (config.write_wave) wave_out = open_output(dir / "wave.csv");

    SimulationOptions options;
    options.lanczos.breakdown_threshold = config.breakdown_threshold;
    options.lanczos.keep_basis = false;
    options.keep_waves = config.write_wave;
    const auto sim = simulate(config.model(), config.times(), options);
    const auto dqpt = detect_dqpt(sim.series);

    write_series_csv(series_out, sim.series);
    finish(series_out, dir / "series.csv");
    write_lanczos_csv(lanczos_out, sim.decomposition.tridiag);
    finish(lanczos_out, dir / "lanczos.csv");
    if (config.write_wave) {
      write_wave_csv(wave_out, sim.series.times, sim.wave_abs);
      finish(wave_out, dir / "wave.csv");
    }
    summary_out << summary_json(sim, dqpt).dump(2) << '\n';
    finish(summary_out, dir / "summary.json");

    log << "krylov_dim " << sim.decomposition.dimension() << ", strong DQPT candidates "
        << dqpt.strong_count() << ", output in " << dir.string() << '\n';
    return static_cast<int>(kExitOk);
  });
}

int run_oracle_compare(const RunConfig& config, std::ostream& log) {
  return guarded(log, [&] {
    validate(config, Command::OracleCompare);
    const auto& dir = config.out_dir;
    prepare_dir(dir);
    auto report_out = open_output(dir / "oracle.json");

    const auto params = config.model();
    const auto times = config.times();
    LanczosOptions lanczos_options;
    lanczos_options.breakdown_threshold = config.breakdown_threshold;
    lanczos_options.keep_basis = false;
    const auto decomp = krylov_for(params, lanczos_options);
    const KrylovPropagator krylov(decomp.tridiag);
    const DirectPropagator direct(params);

    double max_dev = 0.0, at_time = 0.0;
    for (double t : times) {
      const complex phi0 = krylov.at(t).phi[0];
      const auto psi = direct.at(t);
      const complex ref = inner_product(direct.initial().amplitudes, psi.amplitudes);
      const double dev = std::abs(phi0 - ref);
      if (dev > max_dev) {
        max_dev = dev;
        at_time = t;
      }
    }
    constexpr double tolerance = 1e-8;
    const bool pass = max_dev <= tolerance;

    json report = {{"params", {{"N", params.n}, {"h", params.h}, {"g", params.g}}},
                   {"n_points", times.size()},
                   {"t_max", config.t_max},
                   {"max_krylov_direct_deviation", max_dev},
                   {"at_Jt", at_time},
                   {"tolerance", tolerance},
                   {"pass", pass}};
    log << "max |phi0_krylov - <psi0|psi(t)>_direct| = " << format_double(max_dev) << " at Jt "
        << format_double(at_time) << (pass ? "  PASS\n" : "  FAIL\n");

    if (params.g == 0.0 && params.h > 0.0) {
      const auto conv = g0_convergence(params.h, {params.n}, times).front();
      report["g0_off_kink_deviation"] = conv.max_deviation_off_kink;
      report["g0_near_kink_deviation"] = conv.max_deviation_near_kink;
      log << "g=0 max |f_N - f_inf| off-kink = " << format_double(conv.max_deviation_off_kink) << '\n';
    }

    report_out << report.dump(2) << '\n';
    finish(report_out, dir / "oracle.json");
    return static_cast<int>(pass ? kExitOk : kExitOracle);
  });
}

int run_sweep(const RunConfig& config, std::ostream& log) {
  return guarded(log, [&] {
    validate(config, Command::Sweep);
    const auto& dir = config.out_dir;
    prepare_dir(dir);
    auto csv_out = open_output(dir / "sweep.csv");
    auto json_out = open_output(dir / "sweep.json");

    SweepOptions options;
    options.workers = config.workers;
    options.simulation.lanczos.breakdown_threshold = config.breakdown_threshold;
    options.simulation.lanczos.keep_basis = false;
    const auto records =
        sweep(config.h_values, config.g_values, config.n, config.times(), config.t_avg, options);

    write_sweep_csv(csv_out, records);
    finish(csv_out, dir / "sweep.csv");
    json_out << sweep_json(records).dump(2) << '\n';
    finish(json_out, dir / "sweep.json");

    const auto failed = std::count_if(records.begin(), records.end(),
                                      [](const auto& r) { return !r.error.empty(); });
    for (const auto& r : records)
      if (!r.error.empty())
        log << "point h=" << format_double(r.h) << " g=" << format_double(r.g) << " failed: " << r.error << '\n';
    log << records.size() << " points, " << failed << " failed, output in " << dir.string() << '\n';
    return static_cast<int>(failed == static_cast<long>(records.size()) ? kExitConfig : kExitOk);
  });
}

}  // namespace krylov_quench
