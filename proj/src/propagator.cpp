#include "krylov_quench/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/multiprecision/mpfr.hpp>

namespace krylov_quench {

TridiagonalEigensystem eigendecompose(const TridiagonalHamiltonian& tridiag) {
  if (tridiag.dimension() < 1) throw std::invalid_argument("eigendecompose: empty tridiagonal");
  return tridiagonal_eigensystem(tridiag.a, tridiag.b);
}

// ---------------------------------------------------------------------------
// Krylov chain

KrylovPropagator::KrylovPropagator(const TridiagonalHamiltonian& tridiag)
    : system_(eigendecompose(tridiag)) {}

KrylovWave KrylovPropagator::at(double t) const {
  const auto& v = system_.vectors;
  const Eigen::Index d = v.rows();
  if (t == 0.0) {
    KrylovWave start{t, std::vector<complex>(d, 0.0)};
    start.phi[0] = 1.0;
    return start;
  }
  Eigen::VectorXd re(d), im(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    double phase = system_.values[j] * t;
    re[j] = v(0, j) * std::cos(phase);
    im[j] = -v(0, j) * std::sin(phase);
  }
  Eigen::VectorXd phi_re = v * re;
  Eigen::VectorXd phi_im = v * im;
  KrylovWave wave{t, std::vector<complex>(d)};
  for (Eigen::Index k = 0; k < d; ++k) wave.phi[k] = {phi_re[k], phi_im[k]};
  return wave;
}

KrylovWave evolve_krylov(const KrylovDecomposition& decomp, double t) {
  return KrylovPropagator(decomp.tridiag).at(t);
}

// ---------------------------------------------------------------------------
// Direct z-basis evolution

DirectPropagator::DirectPropagator(const ModelParams& params)
    : initial_(initial_state(params, Basis::Z)) {
  BandedOperator op = build_hamiltonian_z(params);
  system_ = tridiagonal_eigensystem(op.diag, op.off1);
  const auto dim = static_cast<Eigen::Index>(initial_.size());
  overlaps_.assign(dim, 0.0);
  for (Eigen::Index j = 0; j < dim; ++j) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < dim; ++k) s += system_.vectors(k, j) * initial_.amplitudes[k].real();
    overlaps_[j] = s;
  }
}

StateVector DirectPropagator::at(double t) const {
  const auto& u = system_.vectors;
  const Eigen::Index dim = u.rows();
  Eigen::VectorXd re(dim), im(dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    double phase = system_.values[j] * t;
    re[j] = overlaps_[j] * std::cos(phase);
    im[j] = -overlaps_[j] * std::sin(phase);
  }
  Eigen::VectorXd psi_re = u * re;
  Eigen::VectorXd psi_im = u * im;
  StateVector out{Basis::Z, std::vector<complex>(dim)};
  for (Eigen::Index k = 0; k < dim; ++k) out.amplitudes[k] = {psi_re[k], psi_im[k]};
  return out;
}

StateVector evolve_direct(const ModelParams& params, double t) {
  return DirectPropagator(params).at(t);
}

// ---------------------------------------------------------------------------
// Extended-precision survival amplitude

using Extended = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<100>,
                                               boost::multiprecision::et_off>;

struct SurvivalAmplitude::Impl {
  std::vector<Extended> values;
  std::vector<Extended> weights;
  double max_abs_value = 0.0;

  // Absolute error scale of the phase sum at time t.
  double resolution(double t) const {
    double eps = std::numeric_limits<Extended>::epsilon().convert_to<double>();
    return 1e3 * eps * (static_cast<double>(values.size()) + max_abs_value * std::abs(t));
  }

  Value finish(const Extended& re, const Extended& im, double t) const {
    if (t == 0.0) return {1.0, 0.0, true};
    Extended mod = sqrt(re * re + im * im);
    Value v;
    v.abs = mod.convert_to<double>();
    v.log_abs = mod > 0 ? log(mod).convert_to<double>() : -std::numeric_limits<double>::infinity();
    v.resolved = v.abs > resolution(t);
    return v;
  }
};

SurvivalAmplitude::SurvivalAmplitude(const ModelParams& params) : impl_(new Impl) {
  params.validate();
  const int n = params.n;
  const Extended h = params.h, g = params.g, nn = n;
  const Extended center = nn * (Extended(1) + h) / 2;

  std::vector<Extended> diag(n + 1), off(n), amp(n + 1);
  for (int k = 0; k <= n; ++k) {
    Extended u = Extended(k) - center;
    diag[k] = -(Extended(2) * u * u / nn - nn * h * h / 2);
  }
  for (int k = 1; k <= n; ++k)
    off[k - 1] = -g * sqrt(Extended(k) * Extended(n + 1 - k));

  // binomial(N, k) / 2^N by the ratio recurrence.
  Extended p = pow(Extended(2), -n);
  for (int k = 0; k <= n; ++k) {
    if (k > 0) p = p * Extended(n - k + 1) / Extended(k);
    amp[k] = sqrt(p);
  }

  auto measure = spectral_measure(std::move(diag), std::move(off), std::move(amp));
  impl_->values = std::move(measure.values);
  impl_->weights = std::move(measure.weights);
  for (const auto& v : impl_->values)
    impl_->max_abs_value = std::max(impl_->max_abs_value, abs(v).convert_to<double>());
}

SurvivalAmplitude::~SurvivalAmplitude() { delete impl_; }

SurvivalAmplitude::SurvivalAmplitude(SurvivalAmplitude&& other) noexcept : impl_(other.impl_) {
  other.impl_ = nullptr;
}

SurvivalAmplitude& SurvivalAmplitude::operator=(SurvivalAmplitude&& other) noexcept {
  std::swap(impl_, other.impl_);
  return *this;
}

SurvivalAmplitude::Value SurvivalAmplitude::at(double t) const {
  const Extended tt = t;
  Extended re = 0, im = 0;
  for (std::size_t j = 0; j < impl_->values.size(); ++j) {
    Extended phase = impl_->values[j] * tt;
    re += impl_->weights[j] * cos(phase);
    im -= impl_->weights[j] * sin(phase);
  }
  return impl_->finish(re, im, t);
}

std::vector<SurvivalAmplitude::Value> SurvivalAmplitude::on_grid(
    const std::vector<double>& times) const {
  std::vector<Value> out;
  out.reserve(times.size());
  const std::size_t m = times.size();
  bool uniform = m >= 3;
  if (uniform) {
    const double step = (times.back() - times.front()) / static_cast<double>(m - 1);
    const double tol = 1e-12 * std::max(1.0, std::abs(times.back()));
    for (std::size_t i = 0; i < m && uniform; ++i)
      uniform = std::abs(times[i] - (times.front() + step * static_cast<double>(i))) <= tol;
  }
  if (!uniform) {
    for (double t : times) out.push_back(at(t));
    return out;
  }

  // e^{-i lambda t_i} advanced by the fixed step e^{-i lambda dt}.
  const std::size_t d = impl_->values.size();
  const Extended t0 = times.front();
  const Extended dt = (Extended(times.back()) - t0) / Extended(m - 1);
  std::vector<Extended> c(d), s(d), dc(d), ds(d);
  for (std::size_t j = 0; j < d; ++j) {
    Extended p0 = impl_->values[j] * t0, p1 = impl_->values[j] * dt;
    c[j] = cos(p0);
    s[j] = sin(p0);
    dc[j] = cos(p1);
    ds[j] = sin(p1);
  }
  for (std::size_t i = 0; i < m; ++i) {
    Extended re = 0, im = 0;
    for (std::size_t j = 0; j < d; ++j) {
      re += impl_->weights[j] * c[j];
      im -= impl_->weights[j] * s[j];
    }
    out.push_back(impl_->finish(re, im, times[i]));
    for (std::size_t j = 0; j < d; ++j) {
      Extended cn = c[j] * dc[j] - s[j] * ds[j];
      s[j] = s[j] * dc[j] + c[j] * ds[j];
      c[j] = cn;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Observables

RateValue rate_function(complex amplitude, int n) {
  if (n < 1) throw std::invalid_argument("rate_function: n must be positive");
  double a = std::abs(amplitude);
  if (a > 1.0 + 1e-9) throw std::invalid_argument("rate_function: |amplitude| exceeds 1");
  if (a == 0.0) return {std::numeric_limits<double>::infinity(), kAmplitudeZero};
  if (a < 1e-300) return {-std::log(1e-300) / n, kAmplitudeFloored};
  return {-std::log(a) / n, kRateOk};
}

RateValue rate_function_from_log(double log_abs, int n) {
  if (n < 1) throw std::invalid_argument("rate_function: n must be positive");
  if (log_abs > 1e-9) throw std::invalid_argument("rate_function: |amplitude| exceeds 1");
  if (std::isinf(log_abs)) return {std::numeric_limits<double>::infinity(), kAmplitudeZero};
  RateValue r{-log_abs / n, kRateOk};
  if (log_abs < std::log(1e-300)) r.flags |= kAmplitudeFloored;
  return r;
}

double complexity(const KrylovWave& wave) {
  double k_mean = 0.0;
  for (std::size_t k = 0; k < wave.phi.size(); ++k) k_mean += k * std::norm(wave.phi[k]);
  return k_mean;
}

double entropy(const KrylovWave& wave) {
  double s = 0.0;
  for (const auto& c : wave.phi) {
    double p = std::norm(c);
    if (p > 0.0) s -= p * std::log(p);
  }
  // p slightly above 1 after rounding would give a tiny negative value.
  return std::max(s, 0.0);
}

double krylov_energy(const TridiagonalHamiltonian& tridiag, const KrylovWave& wave) {
  double e = 0.0;
  for (int k = 0; k < tridiag.dimension(); ++k) {
    e += tridiag.a[k] * std::norm(wave.phi[k]);
    if (k > 0) e += 2.0 * tridiag.b[k - 1] * (std::conj(wave.phi[k - 1]) * wave.phi[k]).real();
  }
  return e;
}

std::vector<double> uniform_grid(double t_max, int n_points) {
  if (n_points < 2) throw std::invalid_argument("uniform_grid: need at least two points");
  if (!(t_max > 0.0)) throw std::invalid_argument("uniform_grid: t_max must be positive");
  std::vector<double> t(n_points);
  for (int i = 0; i < n_points; ++i) t[i] = t_max * i / (n_points - 1);
  return t;
}

Simulation simulate(const ModelParams& params, const std::vector<double>& times,
                    const SimulationOptions& options) {
  params.validate();
  if (times.empty()) throw std::invalid_argument("simulate: empty time grid");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1]))
      throw std::invalid_argument("simulate: time grid must be strictly increasing");

  Simulation sim;
  sim.params = params;
  sim.decomposition = krylov_for(params, options.lanczos);

  const KrylovPropagator krylov(sim.decomposition.tridiag);
  const DirectPropagator direct(params);
  const SurvivalAmplitude survival(params);
  const auto amplitudes = survival.on_grid(times);

  auto& s = sim.series;
  const std::size_t m = times.size();
  s.times = times;
  s.f.resize(m);
  s.complexity.resize(m);
  s.entropy.resize(m);
  s.sz.resize(m);
  s.sx.resize(m);
  s.abs_phi0.resize(m);
  s.flags.resize(m);
  if (options.keep_waves) sim.wave_abs.resize(m);

  for (std::size_t i = 0; i < m; ++i) {
    const auto wave = krylov.at(times[i]);
    s.complexity[i] = complexity(wave);
    s.entropy[i] = entropy(wave);
    const auto spins = spin_expectations(direct.at(times[i]));
    s.sz[i] = spins.sz;
    s.sx[i] = spins.sx;

    RateValue rate = rate_function_from_log(std::min(amplitudes[i].log_abs, 0.0), params.n);
    if (!amplitudes[i].resolved) rate.flags |= kAmplitudeUnresolved;
    s.f[i] = rate.f;
    s.flags[i] = rate.flags;
    s.abs_phi0[i] = std::max(amplitudes[i].abs, 1e-300);

    if (options.keep_waves) {
      auto& row = sim.wave_abs[i];
      row.resize(wave.phi.size());
      for (std::size_t k = 0; k < wave.phi.size(); ++k) row[k] = std::abs(wave.phi[k]);
    }
  }
  return sim;
}

TimeAverage time_average(const ObservableSeries& series, double t_end) {
  if (!(t_end > 0.0)) throw std::invalid_argument("time_average: T must be positive");
  const auto& t = series.times;
  if (t.size() < 2) throw std::invalid_argument("time_average: need at least two samples");
  if (t_end <= t.front() || t_end > t.back() * (1.0 + 1e-12))
    throw std::invalid_argument("time_average: T outside the series range");

  double sz = 0.0, sx = 0.0;
  for (std::size_t i = 1; i < t.size() && t[i - 1] < t_end; ++i) {
    double hi = std::min(t[i], t_end);
    double frac = (hi - t[i - 1]) / (t[i] - t[i - 1]);
    double sz_hi = series.sz[i - 1] + frac * (series.sz[i] - series.sz[i - 1]);
    double sx_hi = series.sx[i - 1] + frac * (series.sx[i] - series.sx[i - 1]);
    sz += 0.5 * (series.sz[i - 1] + sz_hi) * (hi - t[i - 1]);
    sx += 0.5 * (series.sx[i - 1] + sx_hi) * (hi - t[i - 1]);
  }
  const double span = t_end - t.front();
  return {sz / span, sx / span};
}

}  // namespace krylov_quench
