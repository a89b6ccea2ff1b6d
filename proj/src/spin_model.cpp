#include "krylov_quench/spin_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "krylov_quench/tridiagonal.hpp"

namespace krylov_quench {

void ModelParams::validate() const {
  if (n < 2 || n % 2 != 0)
    throw std::invalid_argument("n: must be an even integer >= 2, got " + std::to_string(n));
  if (!(j > 0.0) || !std::isfinite(j))
    throw std::invalid_argument("j: must be positive, got " + std::to_string(j));
  if (!(h >= 0.0) || !std::isfinite(h))
    throw std::invalid_argument("h: must be nonnegative, got " + std::to_string(h));
  if (!(g >= 0.0) || !std::isfinite(g))
    throw std::invalid_argument("g: must be nonnegative, got " + std::to_string(g));
}

const char* to_string(Basis basis) { return basis == Basis::X ? "x" : "z"; }

double StateVector::norm() const {
  double s = 0.0;
  for (const auto& c : amplitudes) s += std::norm(c);
  return std::sqrt(s);
}

complex inner_product(std::span<const complex> a, std::span<const complex> b) {
  if (a.size() != b.size()) throw std::invalid_argument("inner_product: size mismatch");
  complex s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

bool BandedOperator::is_tridiagonal() const {
  return std::all_of(off2.begin(), off2.end(), [](double v) { return v == 0.0; });
}

void BandedOperator::apply(std::span<const complex> in, std::span<complex> out) const {
  const std::size_t n = diag.size();
  if (in.size() != n || out.size() != n)
    throw std::invalid_argument("BandedOperator::apply: dimension mismatch");
  for (std::size_t k = 0; k < n; ++k) {
    complex s = diag[k] * in[k];
    if (k + 1 < n) s += off1[k] * in[k + 1];
    if (k >= 1) s += off1[k - 1] * in[k - 1];
    if (k + 2 < n) s += off2[k] * in[k + 2];
    if (k >= 2) s += off2[k - 2] * in[k - 2];
    out[k] = s;
  }
}

double BandedOperator::expectation(std::span<const complex> state) const {
  std::vector<complex> hpsi(state.size());
  apply(state, hpsi);
  return inner_product(state, hpsi).real();
}

double ladder_coefficient(int n, int k) {
  if (k <= 0 || k > n) return 0.0;
  return std::sqrt(static_cast<double>(k) * static_cast<double>(n + 1 - k));
}

BandedOperator build_hamiltonian_x(const ModelParams& params) {
  params.validate();
  const int n = params.n;
  const double nd = n;
  BandedOperator op;
  op.diag.resize(n + 1);
  op.off1.resize(n);
  op.off2.resize(n - 1);
  for (int k = 0; k <= n; ++k) {
    double ck = ladder_coefficient(n, k);
    double ck1 = ladder_coefficient(n, k + 1);
    op.diag[k] = -nd * ((ck * ck + ck1 * ck1) / (2.0 * nd * nd) + (1.0 - 2.0 * k / nd) * params.g);
  }
  for (int k = 1; k <= n; ++k) op.off1[k - 1] = -params.h * ladder_coefficient(n, k);
  for (int k = 2; k <= n; ++k)
    op.off2[k - 2] = -ladder_coefficient(n, k - 1) * ladder_coefficient(n, k) / (2.0 * nd);
  return op;
}

BandedOperator build_hamiltonian_z(const ModelParams& params) {
  params.validate();
  const int n = params.n;
  const double nd = n;
  // N/2 + hN/2 rather than N(1+h)/2: exact whenever hN is an integer, which
  // keeps the g = 0 level pairs m + m' = -hN exactly degenerate.
  const double center = 0.5 * nd + 0.5 * (nd * params.h);
  BandedOperator op;
  op.diag.resize(n + 1);
  op.off1.resize(n);
  op.off2.assign(n - 1, 0.0);
  for (int k = 0; k <= n; ++k) {
    double u = k - center;
    op.diag[k] = -(2.0 * u * u / nd - 0.5 * nd * params.h * params.h);
  }
  // -2 J g S^x with <S-k+1|S^x|S-k> = C_k / 2.
  for (int k = 1; k <= n; ++k) op.off1[k - 1] = -params.g * ladder_coefficient(n, k);
  return op;
}

BandedOperator build_hamiltonian(const ModelParams& params, Basis basis) {
  return basis == Basis::X ? build_hamiltonian_x(params) : build_hamiltonian_z(params);
}

StateVector initial_state(const ModelParams& params, Basis basis) {
  params.validate();
  const int n = params.n;
  StateVector state{basis, std::vector<complex>(n + 1, 0.0)};
  if (basis == Basis::X) {
    state.amplitudes[0] = 1.0;
    return state;
  }
  const double log_norm = -0.5 * n * std::numbers::ln2;
  const double lg_n = std::lgamma(n + 1.0);
  for (int k = 0; k <= n; ++k) {
    double log_binom = lg_n - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    state.amplitudes[k] = std::exp(log_norm + 0.5 * log_binom);
  }
  // lgamma loses ~1e-16 relative to its argument size; rescale the sum.
  const double norm = state.norm();
  for (auto& c : state.amplitudes) c /= norm;
  return state;
}

StateVector gaussian_approx_z(const ModelParams& params) {
  params.validate();
  const int n = params.n;
  const double nd = n;
  const double prefactor = std::pow(2.0 / (std::numbers::pi * nd), 0.25);
  StateVector state{Basis::Z, std::vector<complex>(n + 1)};
  for (int k = 0; k <= n; ++k) {
    double x = k / nd - 0.5;
    state.amplitudes[k] = prefactor * std::exp(-nd * x * x);
  }
  double norm = state.norm();
  for (auto& c : state.amplitudes) c /= norm;
  return state;
}

double semiclassical_energy(double theta, const ModelParams& params) {
  double c = std::cos(theta);
  return -params.n * (0.5 * c * c + params.h * c + params.g * std::sin(theta));
}

double spinodal_g(double h) {
  if (h <= 0.0 || h >= 1.0) return 0.0;
  return std::pow(1.0 - std::cbrt(h * h), 1.5);
}

namespace {

// Energy per N J and its theta derivative.
double energy_density(double theta, double h, double g) {
  double c = std::cos(theta);
  return -(0.5 * c * c + h * c + g * std::sin(theta));
}

double energy_slope(double theta, double h, double g) {
  double c = std::cos(theta), s = std::sin(theta);
  return c * s + h * s - g * c;
}

double bisect_slope(double lo, double hi, double h, double g) {
  double flo = energy_slope(lo, h, g);
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    double mid = 0.5 * (lo + hi);
    double fm = energy_slope(mid, h, g);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

PhaseClassification classify_phase(double h, double g) {
  if (!(h >= 0.0) || !(g >= 0.0))
    throw std::invalid_argument("classify_phase: h and g must be nonnegative");
  constexpr int kGrid = 10001;
  const double step = std::numbers::pi / (kGrid - 1);
  std::vector<double> e(kGrid);
  for (int i = 0; i < kGrid; ++i) e[i] = energy_density(i * step, h, g);

  // Grid-local minima (endpoints included), refined by bisection on dE/dtheta.
  std::vector<double> minima;
  for (int i = 0; i < kGrid; ++i) {
    bool left = i == 0 || e[i] <= e[i - 1];
    bool right = i == kGrid - 1 || e[i] < e[i + 1];
    if (!(left && right)) continue;
    double theta = i * step;
    if (i > 0 && i < kGrid - 1) {
      double lo = (i - 1) * step, hi = (i + 1) * step;
      if (energy_slope(lo, h, g) < 0.0 && energy_slope(hi, h, g) > 0.0)
        theta = bisect_slope(lo, hi, h, g);
    } else if (i == 0 && energy_slope(step, h, g) < 0.0) {
      theta = bisect_slope(0.0, step, h, g);
    } else if (i == kGrid - 1 && energy_slope(std::numbers::pi - step, h, g) > 0.0) {
      theta = bisect_slope(std::numbers::pi - step, std::numbers::pi, h, g);
    }
    minima.push_back(theta);
  }

  PhaseClassification out;
  out.h = h;
  out.g = g;
  out.spinodal_g = spinodal_g(h);
  out.has_metastable = h > 0.0 && h < 1.0 && g < out.spinodal_g;

  auto by_energy = [&](double a, double b) {
    return energy_density(a, h, g) < energy_density(b, h, g);
  };
  std::sort(minima.begin(), minima.end(), by_energy);
  out.theta_star = minima.front();
  if (out.has_metastable && minima.size() > 1) out.theta_meta = minima[1];
  return out;
}

GroundState ground_state(const ModelParams& params) {
  BandedOperator op = build_hamiltonian_z(params);
  const int dim = op.dimension();
  TridiagonalEigensystem sys = tridiagonal_eigensystem(op.diag, op.off1);

  GroundState gs;
  gs.energy = sys.values[0];
  gs.state.basis = Basis::Z;
  gs.state.amplitudes.resize(dim);
  for (int k = 0; k < dim; ++k) gs.state.amplitudes[k] = sys.vectors(k, 0);
  if (dim > 1) gs.near_degenerate = sys.values[1] - sys.values[0] < 1e-8 * params.n;
  return gs;
}

SpinExpectations spin_expectations(const StateVector& state) {
  const int dim = static_cast<int>(state.size());
  if (dim < 3) throw std::invalid_argument("spin_expectations: dimension must be N + 1 >= 3");
  if (std::abs(state.norm() - 1.0) > 1e-8)
    throw std::invalid_argument("spin_expectations: state is not normalized");
  const int n = dim - 1;

  // The diagonal operator of the basis and its tridiagonal partner, whose
  // element between |S-k+1> and |S-k> is C_k / 2 in either basis.
  double diagonal = 0.0, hopping = 0.0;
  for (int k = 0; k <= n; ++k) diagonal += (0.5 * n - k) * std::norm(state.amplitudes[k]);
  for (int k = 1; k <= n; ++k)
    hopping += (std::conj(state.amplitudes[k - 1]) * state.amplitudes[k]).real() *
               ladder_coefficient(n, k);

  if (state.basis == Basis::Z) return {diagonal, hopping};
  return {hopping, diagonal};
}

}  // namespace krylov_quench
