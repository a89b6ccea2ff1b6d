#pragma once

// LMG model in the symmetric sector S = N/2.
//
// Operators are stored in units of J (they represent H/J), so every time
// argument elsewhere in the library is Jt.  Basis index k = 0..N labels the
// state |S - k> of the chosen spin eigenbasis.

#include <complex>
#include <optional>
#include <span>
#include <vector>

namespace krylov_quench {

using complex = std::complex<double>;

struct ModelParams {
  int n = 2;       // number of spin-1/2 sites, even
  double j = 1.0;  // energy unit
  double h = 0.0;  // longitudinal bias
  double g = 0.0;  // transverse field

  int dimension() const { return n + 1; }
  double spin() const { return 0.5 * n; }

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

enum class Basis { X, Z };

const char* to_string(Basis basis);

struct StateVector {
  Basis basis = Basis::Z;
  std::vector<complex> amplitudes;

  std::size_t size() const { return amplitudes.size(); }
  double norm() const;
};

/// <a|b>, conjugate-linear in the first argument.
complex inner_product(std::span<const complex> a, std::span<const complex> b);

/// Real symmetric matrix with bandwidth <= 2.  off1[k] couples (k, k+1),
/// off2[k] couples (k, k+2).
struct BandedOperator {
  std::vector<double> diag;
  std::vector<double> off1;
  std::vector<double> off2;

  int dimension() const { return static_cast<int>(diag.size()); }
  bool is_tridiagonal() const;

  /// out = H * in.  Sizes must equal dimension().
  void apply(std::span<const complex> in, std::span<complex> out) const;
  double expectation(std::span<const complex> state) const;
};

/// sqrt(k (N + 1 - k)); zero outside 1..N.  C_k / 2 is the matrix element of
/// the raising operator between |S - k> and |S - k + 1>.
double ladder_coefficient(int n, int k);

/// Pentadiagonal form in the S^x eigenbasis.
BandedOperator build_hamiltonian_x(const ModelParams& params);

/// Tridiagonal form in the S^z eigenbasis.
BandedOperator build_hamiltonian_z(const ModelParams& params);

BandedOperator build_hamiltonian(const ModelParams& params, Basis basis);

/// The quench initial state |S>_x written in the requested basis.  In the
/// z-basis the amplitudes are 2^{-N/2} sqrt(binomial(N, k)), evaluated
/// through log-gamma.
StateVector initial_state(const ModelParams& params, Basis basis);

/// Large-N Gaussian form of the z-basis initial state, renormalized.
StateVector gaussian_approx_z(const ModelParams& params);

/// Classical energy of the spin coherent state at polar angle theta, in
/// units of J.
double semiclassical_energy(double theta, const ModelParams& params);

struct PhaseClassification {
  double h = 0.0;
  double g = 0.0;
  double theta_star = 0.0;
  bool has_metastable = false;
  std::optional<double> theta_meta;
  double spinodal_g = 0.0;
};

/// (1 - h^{2/3})^{3/2} for 0 < h < 1, else 0.
double spinodal_g(double h);

PhaseClassification classify_phase(double h, double g);

struct GroundState {
  double energy = 0.0;
  StateVector state;
  // Set when the lowest gap is below 1e-8 N (the h = 0, g < 1 doublet).
  bool near_degenerate = false;
};

GroundState ground_state(const ModelParams& params);

struct SpinExpectations {
  double sz = 0.0;
  double sx = 0.0;
};

/// <S^z> and <S^x> of a normalized state in either basis.  Throws
/// std::invalid_argument when the norm deviates from 1 by more than 1e-8.
SpinExpectations spin_expectations(const StateVector& state);

}  // namespace krylov_quench
