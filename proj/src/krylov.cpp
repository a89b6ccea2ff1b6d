#include "krylov_quench/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "krylov_quench/tridiagonal.hpp"

namespace krylov_quench {

double TridiagonalHamiltonian::b_at(int k) const {
  if (k <= 0 || k >= dimension()) return 0.0;
  return b[k - 1];
}

const char* termination_name(const Termination& t) {
  if (std::holds_alternative<termination::Exhausted>(t)) return "exhausted";
  if (std::holds_alternative<termination::Breakdown>(t)) return "breakdown";
  return "truncated";
}

KrylovDecomposition lanczos(const BandedOperator& op, const StateVector& start,
                            const LanczosOptions& options) {
  const int dim = op.dimension();
  if (static_cast<int>(start.size()) != dim)
    throw std::invalid_argument("lanczos: start vector dimension does not match operator");
  if (std::abs(start.norm() - 1.0) > 1e-8)
    throw std::invalid_argument("lanczos: start vector is not normalized");
  if (options.max_dim < 0) throw std::invalid_argument("lanczos: max_dim must be >= 1");
  const int max_dim = options.max_dim == 0 ? dim : std::min(options.max_dim, dim);

  using Vec = Eigen::VectorXcd;
  Eigen::MatrixXcd basis(dim, max_dim);
  basis.col(0) = Eigen::Map<const Vec>(start.amplitudes.data(), dim);

  KrylovDecomposition out;
  out.basis = start.basis;
  auto& a = out.tridiag.a;
  auto& b = out.tridiag.b;

  Vec w(dim);
  double scale = 0.0;
  for (int k = 0;; ++k) {
    op.apply(std::span<const complex>(basis.col(k).data(), dim), std::span<complex>(w.data(), dim));
    a.push_back(basis.col(k).dot(w).real());
    w -= a[k] * basis.col(k);
    if (k > 0) w -= b[k - 1] * basis.col(k - 1);

    // Full reorthogonalization, two classical Gram-Schmidt passes.
    auto previous = basis.leftCols(k + 1);
    for (int pass = 0; pass < 2; ++pass) {
      Vec overlaps = previous.adjoint() * w;
      w -= previous * overlaps;
    }

    scale = std::max(scale, std::abs(a[k]));
    if (k > 0) scale = std::max(scale, b[k - 1]);

    if (k + 1 == dim) {
      out.termination = termination::Exhausted{};
      break;
    }
    if (k + 1 == max_dim) {
      out.termination = termination::Truncated{};
      break;
    }
    const double beta = w.norm();
    if (beta < options.breakdown_threshold * scale) {
      out.termination = termination::Breakdown{k + 1, beta};
      break;
    }
    b.push_back(beta);
    basis.col(k + 1) = w / beta;
  }

  if (options.keep_basis) out.vectors = basis.leftCols(static_cast<Eigen::Index>(a.size()));
  return out;
}

Basis preferred_basis(const ModelParams& params) {
  return params.g == 0.0 ? Basis::Z : Basis::X;
}

KrylovDecomposition krylov_for(const ModelParams& params, const LanczosOptions& options) {
  Basis basis = preferred_basis(params);
  return lanczos(build_hamiltonian(params, basis), initial_state(params, basis), options);
}

AppendixCoefficients appendix_check(const ModelParams& params) {
  params.validate();
  const double n = params.n, h = params.h, g = params.g;
  const double h2 = h * h;
  const double tail = (n - 1.0) / (2.0 * n);  // squared |S-2>_x weight of H|K_0>

  AppendixCoefficients out;
  out.a0 = -(n * g + 0.5);
  const double b1_sq = n * h2 + tail;
  out.b1 = std::sqrt(b1_sq);
  if (b1_sq > 0.0) {
    // <S-1|H|S-1>, the |S-1>,|S-2> cross term, and <S-2|H|S-2>.
    double a1_b1_sq = n * h2 * (-n * g + 2.0 * g - 1.5 + 1.0 / n) - 2.0 * (n - 1.0) * h2 +
                      tail * (-n * g + 4.0 * g - 2.5 + 4.0 / n);
    out.a1 = a1_b1_sq / b1_sq;
  }
  return out;
}

SlopeCheck slope_check(const TridiagonalHamiltonian& tridiag, const ModelParams& params) {
  if (tridiag.dimension() < 2) throw std::invalid_argument("slope_check: need d >= 2");
  SlopeCheck out;
  out.measured = tridiag.a[1] - tridiag.a[0];
  out.predicted = 2.0 * (params.g - 1.5);
  out.residual = out.measured - out.predicted;
  return out;
}

std::vector<double> local_potential(const TridiagonalHamiltonian& tridiag) {
  std::vector<double> v(tridiag.a.size());
  for (int k = 0; k < tridiag.dimension(); ++k) v[k] = tridiag.a[k] - 2.0 * tridiag.b_at(k);
  return v;
}

namespace {

// Centered moving average of b_1..b_{d-1}; index 0 of the result is b_1.
std::vector<double> smoothed_b(const std::vector<double>& b, int window) {
  const int n = static_cast<int>(b.size());
  const int half = window / 2;
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    int lo = std::max(0, i - half), hi = std::min(n - 1, i + half);
    double s = 0.0;
    for (int j = lo; j <= hi; ++j) s += b[j];
    out[i] = s / (hi - lo + 1);
  }
  return out;
}

}  // namespace

DomainStructure domain_structure(const TridiagonalHamiltonian& tridiag) {
  const int d = tridiag.dimension();
  if (d < 3) throw std::invalid_argument("domain_structure: need d >= 3");
  const auto& b = tridiag.b;
  const int nb = d - 1;

  // A block boundary is an interior valley of the smoothed b_k that falls to
  // at most 75% of the preceding maximum and is followed by a recovery of at
  // least 10% of that maximum.  The falling edge at the end of the sequence
  // never qualifies.  Among valid valleys the lowest one wins.
  const int window = std::max(3, d / 100) | 1;
  const auto sb = smoothed_b(b, window);
  std::vector<double> prefix_max(nb), suffix_max(nb);
  for (int i = 0; i < nb; ++i) prefix_max[i] = std::max(sb[i], i ? prefix_max[i - 1] : sb[i]);
  for (int i = nb - 1; i >= 0; --i)
    suffix_max[i] = std::max(sb[i], i + 1 < nb ? suffix_max[i + 1] : sb[i]);

  DomainStructure out;
  std::optional<int> best;
  for (int i = 1; i + 1 < nb; ++i) {
    if (!(sb[i] <= sb[i - 1] && sb[i] < sb[i + 1])) continue;
    const double peak = prefix_max[i];
    if (sb[i] > 0.75 * peak) continue;
    if (suffix_max[i] - sb[i] < 0.1 * peak) continue;
    if (!best || sb[i] < sb[*best]) best = i;
  }
  if (best) out.boundary_k = *best + 1;

  const int last = out.boundary_k ? *out.boundary_k : d - 1;
  int k_s = 1;
  for (int k = 2; k <= last; ++k)
    if (tridiag.b_at(k) > tridiag.b_at(k_s)) k_s = k;
  out.k_s = k_s;

  const auto v = local_potential(tridiag);
  for (int k = 1; k < d; ++k) {
    if (v[k] >= tridiag.a[0]) {
      out.turning_point = k;
      break;
    }
  }
  return out;
}

SpectrumBounds spectrum_bounds(const TridiagonalHamiltonian& tridiag) {
  const int d = tridiag.dimension();
  if (d < 2) throw std::invalid_argument("spectrum_bounds: need d >= 2");
  SpectrumBounds out;
  out.lo = out.hi = tridiag.a[0];
  for (int k = 0; k < d; ++k) {
    out.lo = std::min(out.lo, tridiag.a[k] - 2.0 * tridiag.b_at(k));
    out.hi = std::max(out.hi, tridiag.a[k] + 2.0 * tridiag.b_at(k));
  }
  auto ev = tridiagonal_eigenvalues(tridiag.a, tridiag.b);
  out.exact_min = ev.front();
  out.exact_max = ev.back();
  return out;
}

std::vector<double> dos_estimate(const TridiagonalHamiltonian& tridiag,
                                 const std::vector<double>& energies, int subintervals) {
  const int d = tridiag.dimension();
  if (d < 2) throw std::invalid_argument("dos_estimate: need d >= 2");
  if (subintervals < 1) throw std::invalid_argument("dos_estimate: subintervals must be >= 1");

  // Node k sits at x = k / (d - 1).  b_k starts at k = 1; below that the
  // first value is held constant.
  auto interp = [](const std::vector<double>& y, double pos) {
    const int n = static_cast<int>(y.size());
    if (n == 1) return y[0];
    pos = std::clamp(pos, 0.0, static_cast<double>(n - 1));
    int i = std::min(static_cast<int>(pos), n - 2);
    double t = pos - i;
    return (1.0 - t) * y[i] + t * y[i + 1];
  };

  std::vector<double> a_x(subintervals), b_x(subintervals);
  for (int i = 0; i < subintervals; ++i) {
    double x = (i + 0.5) / subintervals;
    double pos = x * (d - 1);
    a_x[i] = interp(tridiag.a, pos);
    b_x[i] = interp(tridiag.b, pos - 1.0);
  }

  std::vector<double> out(energies.size(), 0.0);
  for (std::size_t e = 0; e < energies.size(); ++e) {
    double sum = 0.0;
    for (int i = 0; i < subintervals; ++i) {
      double diff = energies[e] - a_x[i];
      double gap = 4.0 * b_x[i] * b_x[i] - diff * diff;
      if (gap > 0.0) sum += 1.0 / std::sqrt(gap);
    }
    out[e] = sum / (std::numbers::pi * subintervals);
  }
  return out;
}

}  // namespace krylov_quench
