#include "krylov_quench/tridiagonal.hpp"

namespace krylov_quench {

TridiagonalEigensystem tridiagonal_eigensystem(std::vector<double> diag,
                                               std::vector<double> off) {
  const auto n = static_cast<Eigen::Index>(diag.size());
  Eigen::MatrixXd z = Eigen::MatrixXd::Identity(n, n);
  detail::implicit_ql(diag, std::move(off), detail::MatrixTracking{&z});

  auto order = detail::ascending_order(diag);
  TridiagonalEigensystem out;
  out.values.resize(diag.size());
  out.vectors.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    out.values[j] = diag[order[j]];
    auto col = z.col(static_cast<Eigen::Index>(order[j]));
    Eigen::Index imax = 0;
    col.cwiseAbs().maxCoeff(&imax);
    out.vectors.col(j) = col(imax) < 0.0 ? Eigen::VectorXd(-col) : Eigen::VectorXd(col);
  }
  return out;
}

}  // namespace krylov_quench
