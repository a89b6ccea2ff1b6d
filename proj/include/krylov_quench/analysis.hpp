#pragma once

#include <optional>
#include <string>
#include <vector>

#include "krylov_quench/krylov.hpp"
#include "krylov_quench/propagator.hpp"
#include "krylov_quench/spin_model.hpp"

namespace krylov_quench {

/// Thermodynamic-limit rate function at g = 0 (units: Jt in, f out).
double exact_rate_g0(double h, double jt);

/// Nonanalytic times of exact_rate_g0 inside [0, jt_max]: Jt = (n + 1/2) pi / h.
std::vector<double> exact_rate_g0_kinks(double h, double jt_max);

struct DqptCandidate {
  double time = 0.0;
  double sharpness = 0.0;  // |f''| at the maximum over the median |f''|
  bool strong = false;
  bool entropy_dip_aligned = false;
  bool k_peak_aligned = false;
};

struct DqptOptions {
  double strong_sharpness = 5.0;
  int alignment_steps = 2;
};

struct DqptReport {
  std::vector<DqptCandidate> candidates;

  std::vector<double> strong_times() const;
  std::size_t strong_count() const;
};

/// Local maxima of f(t), scored by their normalized curvature.  Needs at
/// least five grid points (throws std::invalid_argument otherwise).
DqptReport detect_dqpt(const ObservableSeries& series, const DqptOptions& options = {});

struct KrylovDimension {
  int measured = 0;
  double predicted_g0 = 0.0;  // min((1 + h) N / 2, N)
  Basis basis = Basis::X;
  bool breakdown = false;
};

KrylovDimension krylov_dimension(const ModelParams& params, double threshold = 1e-10);

struct MetastabilityReport {
  bool has_boundary = false;
  std::optional<int> boundary_k;
  std::vector<int> local_potential_minima;
  std::vector<double> times;
  std::vector<double> tail_probability;
  double cv_first_half = 0.0;
  double cv_second_half = 0.0;
  bool longtime_flag = false;
};

struct MetastabilityOptions {
  LanczosOptions lanczos;
  // longtime_flag is raised when CV(K) over the second half of the grid
  // exceeds this multiple of CV(K) over the first half.
  double cv_growth = 1.0;
};

/// Metastability diagnostics in Krylov space.  Empty when the coefficient
/// sequence has no detectable second block.
MetastabilityReport metastability_report(const ModelParams& params,
                                         const std::vector<double>& times,
                                         const MetastabilityOptions& options = {});

struct SweepRecord {
  double h = 0.0;
  double g = 0.0;
  int n = 0;
  double max_k = 0.0;
  std::optional<int> argmax_b;
  int krylov_dim = 0;
  double sz_bar = 0.0;
  double sx_bar = 0.0;
  double ground_sz = 0.0;
  double ground_sx = 0.0;
  std::vector<double> dqpt_times;  // strong candidates
  bool has_metastable = false;
  std::string error;  // non-empty when this point failed
};

/// argmax of b_k over 1 <= k <= max_k.
std::optional<int> argmax_b_within(const TridiagonalHamiltonian& tridiag, double max_k);

/// Derived quantities of one (h, g) point.
SweepRecord sweep_point(const ModelParams& params, const std::vector<double>& times,
                        double t_avg, const SimulationOptions& options = {});

struct SweepOptions {
  int workers = 1;
  SimulationOptions simulation;
};

/// Row-major over (h, g); output order is independent of the worker count.
std::vector<SweepRecord> sweep(const std::vector<double>& h_values,
                               const std::vector<double>& g_values, int n,
                               const std::vector<double>& times, double t_avg,
                               const SweepOptions& options = {});

struct G0Convergence {
  int n = 0;
  double max_deviation_off_kink = 0.0;
  double max_deviation_near_kink = 0.0;
};

std::vector<G0Convergence> g0_convergence(double h, const std::vector<int>& n_values,
                                          const std::vector<double>& times,
                                          double kink_window = 0.2);

/// Worker count from KRYLOV_QUENCH_THREADS, capped by `requested`.
int worker_cap(int requested);

}  // namespace krylov_quench
