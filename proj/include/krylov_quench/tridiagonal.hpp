#pragma once

// Symmetric tridiagonal eigensolver (implicit QL with Wilkinson shifts).
//
// The solver is templated on the scalar so the same iteration serves the
// double-precision propagators and the extended-precision survival
// amplitude.  Rotations are forwarded to a tracker, which either accumulates
// full eigenvectors or carries a single projected vector.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace krylov_quench {

namespace detail {

struct NoTracking {
  template <class Real>
  void rotate(std::size_t, const Real&, const Real&) {}
};

template <class Real>
struct VectorTracking {
  std::vector<Real>* row;
  void rotate(std::size_t i, const Real& c, const Real& s) {
    auto& y = *row;
    Real f = y[i + 1];
    y[i + 1] = s * y[i] + c * f;
    y[i] = c * y[i] - s * f;
  }
};

struct MatrixTracking {
  Eigen::MatrixXd* z;
  void rotate(std::size_t i, double c, double s) {
    auto& m = *z;
    for (Eigen::Index k = 0; k < m.rows(); ++k) {
      double f = m(k, i + 1);
      m(k, i + 1) = s * m(k, i) + c * f;
      m(k, i) = c * m(k, i) - s * f;
    }
  }
};

// On entry diag has n entries and off has n - 1 (off[i] couples i, i+1).  On
// exit diag holds the unsorted eigenvalues.
template <class Real, class Tracker>
void implicit_ql(std::vector<Real>& diag, std::vector<Real> off, Tracker tracker) {
  using std::abs;
  using std::sqrt;
  const std::size_t n = diag.size();
  if (n == 0) return;
  off.resize(n, Real(0));
  const Real eps = std::numeric_limits<Real>::epsilon();

  auto pythag = [](const Real& a, const Real& b) {
    Real aa = abs(a), bb = abs(b);
    if (aa > bb) {
      Real r = bb / aa;
      return aa * sqrt(Real(1) + r * r);
    }
    if (bb == 0) return Real(0);
    Real r = aa / bb;
    return bb * sqrt(Real(1) + r * r);
  };

  for (std::size_t l = 0; l < n; ++l) {
    int iterations = 0;
    std::size_t m;
    do {
      for (m = l; m + 1 < n; ++m) {
        Real dd = abs(diag[m]) + abs(diag[m + 1]);
        if (abs(off[m]) <= eps * dd) break;
      }
      if (m == l) break;
      if (++iterations > 100) throw std::runtime_error("implicit_ql: no convergence");

      Real g = (diag[l + 1] - diag[l]) / (Real(2) * off[l]);
      Real r = pythag(g, Real(1));
      g = diag[m] - diag[l] + off[l] / (g + (g >= 0 ? r : Real(-r)));
      Real s = 1, c = 1, p = 0;
      bool underflow = false;
      for (std::size_t i = m; i-- > l;) {
        Real f = s * off[i];
        Real b = c * off[i];
        r = pythag(f, g);
        off[i + 1] = r;
        if (r == 0) {
          diag[i + 1] -= p;
          off[m] = 0;
          underflow = true;
          break;
        }
        s = f / r;
        c = g / r;
        g = diag[i + 1] - p;
        r = (diag[i] - g) * s + Real(2) * c * b;
        p = s * r;
        diag[i + 1] = g + p;
        g = c * r - b;
        tracker.rotate(i, c, s);
      }
      if (underflow) continue;
      diag[l] -= p;
      off[l] = g;
      off[m] = 0;
    } while (m != l);
  }
}

template <class Real>
std::vector<std::size_t> ascending_order(const std::vector<Real>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  return order;
}

}  // namespace detail

/// Eigenvalues in ascending order.
template <class Real>
std::vector<Real> tridiagonal_eigenvalues(std::vector<Real> diag, std::vector<Real> off) {
  detail::implicit_ql(diag, std::move(off), detail::NoTracking{});
  std::sort(diag.begin(), diag.end());
  return diag;
}

/// Eigenvalues together with the squared projections of `vec` onto each
/// eigenvector; this is the spectral measure of the pair (T, vec).
template <class Real>
struct SpectralMeasure {
  std::vector<Real> values;
  std::vector<Real> weights;
};

template <class Real>
SpectralMeasure<Real> spectral_measure(std::vector<Real> diag, std::vector<Real> off,
                                       std::vector<Real> vec) {
  detail::implicit_ql(diag, std::move(off), detail::VectorTracking<Real>{&vec});
  auto order = detail::ascending_order(diag);
  SpectralMeasure<Real> out;
  out.values.reserve(diag.size());
  out.weights.reserve(diag.size());
  for (std::size_t i : order) {
    out.values.push_back(diag[i]);
    out.weights.push_back(vec[i] * vec[i]);
  }
  return out;
}

struct TridiagonalEigensystem {
  std::vector<double> values;  // ascending
  Eigen::MatrixXd vectors;     // column j pairs with values[j]
};

/// Full spectral decomposition; each eigenvector has its largest-magnitude
/// component positive.
TridiagonalEigensystem tridiagonal_eigensystem(std::vector<double> diag,
                                               std::vector<double> off);

}  // namespace krylov_quench
