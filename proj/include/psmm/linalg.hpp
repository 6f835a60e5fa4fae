#pragma once

#include <Eigen/Dense>

namespace psmm {

/// Eigenpairs of a symmetric matrix, eigenvalues in descending order.
struct SortedEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

SortedEigen sorted_eigen(const Eigen::MatrixXd& symmetric);

/// ||M - M^T||_F <= rel_tol * max(1, ||M||_F).
bool is_symmetric(const Eigen::MatrixXd& m, double rel_tol = 1e-10);

/// The unique SPD R with R (M + ridge I) R = I.
Eigen::MatrixXd sym_inv_sqrt(const Eigen::MatrixXd& m, double ridge = 0.0);

/// Symmetric PSD square root; throws if M is not SPD.
Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& m);

/// Orthonormal basis (thin Q of a Householder QR) for the column span.
Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& basis);

/// Flip each column so its largest-magnitude entry is positive.
void canonicalize_signs(Eigen::MatrixXd& columns);

}  // namespace psmm
