#pragma once

// Lanczos tridiagonalization with full reorthogonalization, and structural
// diagnostics of the resulting coefficient sequences.

#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "krylov_quench/spin_model.hpp"

namespace krylov_quench {

/// Krylov-space Hamiltonian in units of J.  a has d entries; b has d - 1
/// entries, b[i] holding the coefficient b_{i+1} between |K_i> and |K_{i+1}>.
struct TridiagonalHamiltonian {
  std::vector<double> a;
  std::vector<double> b;

  int dimension() const { return static_cast<int>(a.size()); }
  /// b_k with the conventions b_0 = b_d = 0.
  double b_at(int k) const;
};

namespace termination {
struct Exhausted {};
struct Breakdown {
  int k = 0;           // index of the vanishing b_k; equals the Krylov dimension
  double value = 0.0;  // the norm that fell below threshold
};
struct Truncated {};  // max_dim reached before either of the above
}  // namespace termination

using Termination =
    std::variant<termination::Exhausted, termination::Breakdown, termination::Truncated>;

const char* termination_name(const Termination& t);

struct LanczosOptions {
  int max_dim = 0;  // 0 means the operator dimension
  double breakdown_threshold = 1e-10;
  bool keep_basis = true;
};

struct KrylovDecomposition {
  TridiagonalHamiltonian tridiag;
  Basis basis = Basis::X;
  Eigen::MatrixXcd vectors;  // column k is |K_k>; empty unless keep_basis
  Termination termination;

  int dimension() const { return tridiag.dimension(); }
};

/// Throws std::invalid_argument for an unnormalized start vector, a
/// dimension mismatch, or max_dim < 0.
KrylovDecomposition lanczos(const BandedOperator& op, const StateVector& start,
                            const LanczosOptions& options = {});

/// z-basis at g = 0 (H diagonal there), x-basis otherwise.
Basis preferred_basis(const ModelParams& params);

/// Lanczos on the model's quench pair (H, |S>_x) in the preferred basis.
KrylovDecomposition krylov_for(const ModelParams& params, const LanczosOptions& options = {});

struct AppendixCoefficients {
  double a0 = 0.0;
  double b1 = 0.0;
  std::optional<double> a1;  // undefined when b1 = 0
};

/// Closed forms for the first Lanczos coefficients, in units of J.
AppendixCoefficients appendix_check(const ModelParams& params);

struct SlopeCheck {
  double measured = 0.0;   // a1 - a0
  double predicted = 0.0;  // 2 (g - 3/2)
  double residual = 0.0;
};

SlopeCheck slope_check(const TridiagonalHamiltonian& tridiag, const ModelParams& params);

struct DomainStructure {
  std::optional<int> boundary_k;
  std::optional<int> k_s;
  std::optional<int> turning_point;
};

/// Two-block split of the b_k sequence, location of the first-block b_k peak
/// and the return point of the local potential a_k - 2 b_k.  The block
/// boundary is a heuristic; see the implementation for the rule.
DomainStructure domain_structure(const TridiagonalHamiltonian& tridiag);

/// Local potential v_k = a_k - 2 b_k with b_0 = 0.
std::vector<double> local_potential(const TridiagonalHamiltonian& tridiag);

struct SpectrumBounds {
  double lo = 0.0;
  double hi = 0.0;
  double exact_min = 0.0;
  double exact_max = 0.0;
};

SpectrumBounds spectrum_bounds(const TridiagonalHamiltonian& tridiag);

/// Continuum density of states built from the interpolated coefficient
/// sequences, integrated by midpoint quadrature over `subintervals` cells.
std::vector<double> dos_estimate(const TridiagonalHamiltonian& tridiag,
                                 const std::vector<double>& energies,
                                 int subintervals = 10000);

}  // namespace krylov_quench
