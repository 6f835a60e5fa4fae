#include "psmm/linalg.hpp"

#include <cmath>

#include "psmm/error.hpp"

namespace psmm {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

SortedEigen sorted_eigen(const MatrixXd& symmetric) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetric);
  require(es.info() == Eigen::Success, "symmetric eigendecomposition failed",
          ErrorKind::SingularCovariance);
  // Eigen returns ascending order.
  const Index n = symmetric.rows();
  SortedEigen out{VectorXd(n), MatrixXd(n, n)};
  for (Index i = 0; i < n; ++i) {
    out.values[i] = es.eigenvalues()[n - 1 - i];
    out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  return out;
}

bool is_symmetric(const MatrixXd& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.transpose()).norm() <= rel_tol * std::max(1.0, m.norm());
}

MatrixXd sym_inv_sqrt(const MatrixXd& m, double ridge) {
  require(is_symmetric(m), "sym_inv_sqrt: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (m + m.transpose()));
  const VectorXd shifted = es.eigenvalues().array() + ridge;
  require(shifted.minCoeff() > 0.0, "sym_inv_sqrt: matrix + ridge is not positive definite",
          ErrorKind::SingularCovariance);
  const MatrixXd& q = es.eigenvectors();
  return q * shifted.cwiseSqrt().cwiseInverse().asDiagonal() * q.transpose();
}

MatrixXd sym_sqrt(const MatrixXd& m) {
  require(is_symmetric(m), "sym_sqrt: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (m + m.transpose()));
  require(es.eigenvalues().minCoeff() > 0.0, "sym_sqrt: matrix is not positive definite");
  const MatrixXd& q = es.eigenvectors();
  return q * es.eigenvalues().cwiseSqrt().asDiagonal() * q.transpose();
}

MatrixXd orthonormalize(const MatrixXd& basis) {
  require(basis.cols() >= 1 && basis.cols() <= basis.rows(),
          "basis must have between 1 and d columns", ErrorKind::DimensionMismatch);
  Eigen::HouseholderQR<MatrixXd> qr(basis);
  MatrixXd q = qr.householderQ() * MatrixXd::Identity(basis.rows(), basis.cols());
  return q;
}

void canonicalize_signs(MatrixXd& columns) {
  for (Index j = 0; j < columns.cols(); ++j) {
    Index arg = 0;
    columns.col(j).cwiseAbs().maxCoeff(&arg);
    if (columns(arg, j) < 0.0) columns.col(j) *= -1.0;
  }
}

}  // namespace psmm
