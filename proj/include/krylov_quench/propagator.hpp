#pragma once

// Time evolution in Krylov space and directly in the z-basis, plus the
// observables built on top of it.  All times are Jt.

#include <complex>
#include <cstdint>
#include <vector>

#include "krylov_quench/krylov.hpp"
#include "krylov_quench/spin_model.hpp"
#include "krylov_quench/tridiagonal.hpp"

namespace krylov_quench {

TridiagonalEigensystem eigendecompose(const TridiagonalHamiltonian& tridiag);

struct KrylovWave {
  double t = 0.0;
  std::vector<complex> phi;
};

/// Spectral propagator for the chain i dphi/dt = T phi, phi(0) = e_0.
class KrylovPropagator {
 public:
  explicit KrylovPropagator(const TridiagonalHamiltonian& tridiag);

  KrylovWave at(double t) const;
  int dimension() const { return static_cast<int>(system_.values.size()); }
  const TridiagonalEigensystem& eigensystem() const { return system_; }

 private:
  TridiagonalEigensystem system_;
};

KrylovWave evolve_krylov(const KrylovDecomposition& decomp, double t);

/// e^{-iHt}|psi_0> in the z-basis, built without any Krylov data.
class DirectPropagator {
 public:
  explicit DirectPropagator(const ModelParams& params);

  StateVector at(double t) const;
  const StateVector& initial() const { return initial_; }

 private:
  TridiagonalEigensystem system_;
  StateVector initial_;
  std::vector<double> overlaps_;  // <u_j|psi_0>
};

StateVector evolve_direct(const ModelParams& params, double t);

/// Survival amplitude <psi_0|psi(t)> from the spectral measure of the
/// z-basis pair, carried in 100-digit arithmetic.  Double precision cannot
/// resolve amplitudes below ~1e-16, which is far above e^{-f N} for the rate
/// functions of interest.
class SurvivalAmplitude {
 public:
  explicit SurvivalAmplitude(const ModelParams& params);
  ~SurvivalAmplitude();
  SurvivalAmplitude(SurvivalAmplitude&&) noexcept;
  SurvivalAmplitude& operator=(SurvivalAmplitude&&) noexcept;

  struct Value {
    double abs = 0.0;
    double log_abs = 0.0;  // ln|amplitude|, finite even when abs underflows
    bool resolved = true;  // false when below the arithmetic's resolution
  };

  Value at(double t) const;
  /// Evaluates a whole grid; uniform grids use a phase recurrence.
  std::vector<Value> on_grid(const std::vector<double>& times) const;

 private:
  struct Impl;
  Impl* impl_;
};

enum RateFlag : std::uint32_t {
  kRateOk = 0,
  kAmplitudeFloored = 1u << 0,   // |amplitude| < 1e-300, floored
  kAmplitudeZero = 1u << 1,      // exact zero, rate reported as +inf
  kAmplitudeUnresolved = 1u << 2 // below the extended-precision resolution
};

struct RateValue {
  double f = 0.0;
  std::uint32_t flags = kRateOk;
};

/// f = -ln|amplitude| / N.  Throws for |amplitude| > 1 + 1e-9.
RateValue rate_function(complex amplitude, int n);
RateValue rate_function_from_log(double log_abs, int n);

double complexity(const KrylovWave& wave);
double entropy(const KrylovWave& wave);

/// <psi|H|psi> for a Krylov-space wave, in units of J.
double krylov_energy(const TridiagonalHamiltonian& tridiag, const KrylovWave& wave);

struct ObservableSeries {
  std::vector<double> times;
  std::vector<double> f;
  std::vector<double> complexity;
  std::vector<double> entropy;
  std::vector<double> sz;
  std::vector<double> sx;
  std::vector<double> abs_phi0;
  std::vector<std::uint32_t> flags;

  std::size_t size() const { return times.size(); }
};

struct SimulationOptions {
  LanczosOptions lanczos;
  bool keep_waves = false;
};

struct Simulation {
  ModelParams params;
  KrylovDecomposition decomposition;
  ObservableSeries series;
  std::vector<std::vector<double>> wave_abs;  // [time][k] = |phi_k|, if kept
};

/// Uniform grid of n_points on [0, t_max].
std::vector<double> uniform_grid(double t_max, int n_points);

/// Throws std::invalid_argument unless the grid is strictly increasing.
Simulation simulate(const ModelParams& params, const std::vector<double>& times,
                    const SimulationOptions& options = {});

struct TimeAverage {
  double sz_bar = 0.0;
  double sx_bar = 0.0;
};

/// Trapezoidal average over [times.front(), T]; T must lie inside the grid
/// and be positive.
TimeAverage time_average(const ObservableSeries& series, double t_end);

}  // namespace krylov_quench
