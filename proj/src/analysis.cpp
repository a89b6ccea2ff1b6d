#include "krylov_quench/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace krylov_quench {

double exact_rate_g0(double h, double jt) {
  if (!(h > 0.0)) throw std::invalid_argument("exact_rate_g0: h must be positive");
  if (!(jt >= 0.0)) throw std::invalid_argument("exact_rate_g0: Jt must be nonnegative");
  const double x = h * jt;
  const double n0 = std::floor(x / std::numbers::pi);
  double best = std::numeric_limits<double>::infinity();
  for (int dn = -2; dn <= 2; ++dn) {
    double r = x - std::numbers::pi * (n0 + dn);
    best = std::min(best, r * r);
  }
  return best / (2.0 * (1.0 + jt * jt));
}

std::vector<double> exact_rate_g0_kinks(double h, double jt_max) {
  if (!(h > 0.0)) throw std::invalid_argument("exact_rate_g0_kinks: h must be positive");
  std::vector<double> kinks;
  for (int n = 0;; ++n) {
    double t = (n + 0.5) * std::numbers::pi / h;
    if (t > jt_max) break;
    kinks.push_back(t);
  }
  return kinks;
}

// ---------------------------------------------------------------------------
// DQPT detection

std::vector<double> DqptReport::strong_times() const {
  std::vector<double> out;
  for (const auto& c : candidates)
    if (c.strong) out.push_back(c.time);
  return out;
}

std::size_t DqptReport::strong_count() const {
  return static_cast<std::size_t>(
      std::count_if(candidates.begin(), candidates.end(), [](const auto& c) { return c.strong; }));
}

DqptReport detect_dqpt(const ObservableSeries& series, const DqptOptions& options) {
  const auto& t = series.times;
  const auto& f = series.f;
  const int m = static_cast<int>(t.size());
  if (m < 5) throw std::invalid_argument("detect_dqpt: need at least 5 samples");

  // Nonuniform three-point second derivative.
  std::vector<double> curvature(m, 0.0);
  for (int i = 1; i + 1 < m; ++i) {
    double h1 = t[i] - t[i - 1], h2 = t[i + 1] - t[i];
    curvature[i] =
        std::abs(2.0 * ((f[i + 1] - f[i]) / h2 - (f[i] - f[i - 1]) / h1) / (h1 + h2));
  }
  std::vector<double> interior(curvature.begin() + 1, curvature.end() - 1);
  std::nth_element(interior.begin(), interior.begin() + interior.size() / 2, interior.end());
  double median = interior[interior.size() / 2];
  if (!(median > 0.0)) median = std::numeric_limits<double>::min();

  auto local_extremum_near = [&](const std::vector<double>& y, int i, bool maximum) {
    if (y.size() != t.size()) return false;
    int lo = std::max(1, i - options.alignment_steps);
    int hi = std::min(m - 2, i + options.alignment_steps);
    for (int j = lo; j <= hi; ++j) {
      bool ok = maximum ? (y[j] >= y[j - 1] && y[j] >= y[j + 1])
                        : (y[j] <= y[j - 1] && y[j] <= y[j + 1]);
      if (ok) return true;
    }
    return false;
  };

  DqptReport report;
  for (int i = 1; i + 1 < m; ++i) {
    if (!(f[i] > f[i - 1] && f[i] >= f[i + 1])) continue;
    DqptCandidate c;
    c.time = t[i];
    c.sharpness = curvature[i] / median;
    c.strong = c.sharpness >= options.strong_sharpness;
    c.k_peak_aligned = local_extremum_near(series.complexity, i, true);
    c.entropy_dip_aligned = local_extremum_near(series.entropy, i, false);
    report.candidates.push_back(c);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Krylov dimension

KrylovDimension krylov_dimension(const ModelParams& params, double threshold) {
  params.validate();
  LanczosOptions options;
  options.breakdown_threshold = threshold;
  options.keep_basis = false;
  auto decomp = krylov_for(params, options);

  KrylovDimension out;
  out.measured = decomp.dimension();
  out.predicted_g0 = std::min(0.5 * (1.0 + params.h) * params.n, static_cast<double>(params.n));
  out.basis = decomp.basis;
  out.breakdown = std::holds_alternative<termination::Breakdown>(decomp.termination);
  return out;
}

// ---------------------------------------------------------------------------
// Metastability

namespace {

double coefficient_of_variation(const std::vector<double>& x, std::size_t lo, std::size_t hi) {
  if (hi <= lo) return 0.0;
  double mean = 0.0;
  for (std::size_t i = lo; i < hi; ++i) mean += x[i];
  mean /= static_cast<double>(hi - lo);
  double var = 0.0;
  for (std::size_t i = lo; i < hi; ++i) var += (x[i] - mean) * (x[i] - mean);
  var /= static_cast<double>(hi - lo);
  return mean != 0.0 ? std::sqrt(var) / std::abs(mean) : 0.0;
}

}  // namespace

MetastabilityReport metastability_report(const ModelParams& params,
                                         const std::vector<double>& times,
                                         const MetastabilityOptions& options) {
  params.validate();
  if (times.size() < 4) throw std::invalid_argument("metastability_report: need >= 4 samples");
  LanczosOptions lanczos_options = options.lanczos;
  lanczos_options.keep_basis = false;
  const auto decomp = krylov_for(params, lanczos_options);
  const auto& tridiag = decomp.tridiag;

  MetastabilityReport report;
  if (tridiag.dimension() < 3) return report;
  const auto domains = domain_structure(tridiag);
  if (!domains.boundary_k) return report;
  const int boundary = *domains.boundary_k;
  report.has_boundary = true;
  report.boundary_k = boundary;

  // Interior minima of the smoothed local potential in the second block.
  const int d = tridiag.dimension();
  const auto v = local_potential(tridiag);
  const int half = (std::max(3, d / 100) | 1) / 2;
  std::vector<double> sv(d);
  for (int k = 0; k < d; ++k) {
    int lo = std::max(0, k - half), hi = std::min(d - 1, k + half);
    double s = 0.0;
    for (int j = lo; j <= hi; ++j) s += v[j];
    sv[k] = s / (hi - lo + 1);
  }
  for (int k = boundary + 1; k + 1 < d; ++k)
    if (sv[k] < sv[k - 1] && sv[k] < sv[k + 1]) report.local_potential_minima.push_back(k);

  const KrylovPropagator propagator(tridiag);
  std::vector<double> k_series(times.size());
  report.times = times;
  report.tail_probability.resize(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    const auto wave = propagator.at(times[i]);
    double tail = 0.0;
    for (int k = boundary + 1; k < d; ++k) tail += std::norm(wave.phi[k]);
    report.tail_probability[i] = tail;
    k_series[i] = complexity(wave);
  }
  const std::size_t mid = times.size() / 2;
  report.cv_first_half = coefficient_of_variation(k_series, 0, mid);
  report.cv_second_half = coefficient_of_variation(k_series, mid, times.size());
  report.longtime_flag = report.cv_second_half > options.cv_growth * report.cv_first_half;
  return report;
}

// ---------------------------------------------------------------------------
// Sweeps

std::optional<int> argmax_b_within(const TridiagonalHamiltonian& tridiag, double max_k) {
  const int last = std::min(static_cast<int>(std::floor(max_k)), tridiag.dimension() - 1);
  if (last < 1) return std::nullopt;
  int best = 1;
  for (int k = 2; k <= last; ++k)
    if (tridiag.b_at(k) > tridiag.b_at(best)) best = k;
  return best;
}

SweepRecord sweep_point(const ModelParams& params, const std::vector<double>& times, double t_avg,
                        const SimulationOptions& options) {
  SweepRecord rec;
  rec.h = params.h;
  rec.g = params.g;
  rec.n = params.n;
  try {
    const auto sim = simulate(params, times, options);
    const auto& s = sim.series;
    rec.max_k = *std::max_element(s.complexity.begin(), s.complexity.end());
    rec.argmax_b = argmax_b_within(sim.decomposition.tridiag, rec.max_k);
    rec.krylov_dim = sim.decomposition.dimension();
    const auto avg = time_average(s, t_avg);
    rec.sz_bar = avg.sz_bar;
    rec.sx_bar = avg.sx_bar;
    const auto gs = spin_expectations(ground_state(params).state);
    rec.ground_sz = gs.sz;
    rec.ground_sx = gs.sx;
    rec.dqpt_times = detect_dqpt(s).strong_times();
    rec.has_metastable = classify_phase(params.h, params.g).has_metastable;
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  return rec;
}

int worker_cap(int requested) {
  int workers = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("KRYLOV_QUENCH_THREADS")) {
    int cap = std::atoi(env);
    if (cap > 0) workers = std::min(workers, cap);
  }
  return std::max(1, workers);
}

std::vector<SweepRecord> sweep(const std::vector<double>& h_values,
                               const std::vector<double>& g_values, int n,
                               const std::vector<double>& times, double t_avg,
                               const SweepOptions& options) {
  if (h_values.empty() || g_values.empty())
    throw std::invalid_argument("sweep: h and g grids must be nonempty");
  const std::size_t total = h_values.size() * g_values.size();
  std::vector<SweepRecord> records(total);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      ModelParams p;
      p.n = n;
      p.h = h_values[i / g_values.size()];
      p.g = g_values[i % g_values.size()];
      records[i] = sweep_point(p, times, t_avg, options.simulation);
    }
  };

  const int workers = std::min<int>(worker_cap(options.workers), static_cast<int>(total));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return records;
}

std::vector<G0Convergence> g0_convergence(double h, const std::vector<int>& n_values,
                                          const std::vector<double>& times, double kink_window) {
  if (!(h > 0.0)) throw std::invalid_argument("g0_convergence: h must be positive");
  const auto kinks = exact_rate_g0_kinks(h, times.empty() ? 0.0 : times.back() + kink_window);
  std::vector<G0Convergence> out;
  for (int n : n_values) {
    ModelParams p;
    p.n = n;
    p.h = h;
    p.g = 0.0;
    const auto sim = simulate(p, times);
    G0Convergence row;
    row.n = n;
    for (std::size_t i = 0; i < times.size(); ++i) {
      double dev = std::abs(sim.series.f[i] - exact_rate_g0(h, times[i]));
      bool near = std::any_of(kinks.begin(), kinks.end(),
                              [&](double k) { return std::abs(times[i] - k) <= kink_window; });
      double& slot = near ? row.max_deviation_near_kink : row.max_deviation_off_kink;
      slot = std::max(slot, dev);
    }
    out.push_back(row);
  }
  return out;
}

}  // namespace krylov_quench
