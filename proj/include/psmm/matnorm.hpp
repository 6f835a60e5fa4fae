#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "psmm/dataset.hpp"

namespace psmm {

struct FlipFlopOptions {
  double tol = 1e-8;
  int max_iter = 200;
  double ridge = 1e-8;
  /// Apply the trace convention after every sweep instead of once at the end.
  bool rescale_every_sweep = false;
  /// Starting column factor (defaults to identity); used for equivariance checks.
  std::optional<Eigen::MatrixXd> initial_sigma_col;
};

/// Matrix-normal parameters. Var[vec X] = sigma_col (x) sigma_row with
/// trace(sigma_col) = d2, so sigma_row carries the overall scale.
struct MatNormParams {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd sigma_row;
  Eigen::MatrixXd sigma_col;
  int iterations = 0;
  bool converged = true;
  /// Log-likelihood after every half-sweep (one factor update).
  std::vector<double> loglik_trace;

  Eigen::Index rows() const { return mean.rows(); }
  Eigen::Index cols() const { return mean.cols(); }
};

/// Tensor-normal parameters: Var[vec X] is the Kronecker product of the
/// sigmas; trace(sigma_k) = d_k for k >= 2.
struct TensorNormParams {
  Tensor mean;
  std::vector<Eigen::MatrixXd> sigmas;
  int iterations = 0;
  bool converged = true;
  std::vector<double> loglik_trace;
};

Eigen::MatrixXd sample_mean(const MatrixDataset& data);
Tensor sample_mean(const TensorDataset& data);

/// n >= max_k d_k / prod_{j != k} d_j + 1; for matrices this is the
/// max(d1/d2, d2/d1) + 1 condition for positive-definite convergence.
bool flipflop_sample_size_ok(Eigen::Index n, std::span<const Eigen::Index> dims);

/// Flip-flop maximum likelihood for the Kronecker covariance. Throws
/// SampleTooSmall / SingularCovariance; non-convergence is reported through
/// `converged = false` on the returned last iterate.
MatNormParams flipflop_fit(const MatrixDataset& data, const FlipFlopOptions& options = {});

TensorNormParams flipflop_fit_tensor(const TensorDataset& data,
                                     const FlipFlopOptions& options = {});

/// Gaussian log-likelihood of the centered samples under (sigma_row, sigma_col).
double matnorm_loglik(const MatrixDataset& data, const Eigen::MatrixXd& mean,
                      const Eigen::MatrixXd& sigma_row, const Eigen::MatrixXd& sigma_col);

double tensornorm_loglik(const TensorDataset& data, const Tensor& mean,
                         const std::vector<Eigen::MatrixXd>& sigmas);

/// Relative Frobenius distance ||A (x) B - C (x) D|| / ||C (x) D|| without
/// materializing either product.
double kron_relative_change(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                            const Eigen::MatrixXd& c, const Eigen::MatrixXd& d);

struct WhitenedDataset {
  std::vector<Eigen::MatrixXd> z;
  Eigen::MatrixXd row_inv_sqrt;
  Eigen::MatrixXd col_inv_sqrt;
  MatNormParams params;
};

/// Z_i = sigma_row^{-1/2} (X_i - mean) sigma_col^{-1/2}.
WhitenedDataset whiten(const MatrixDataset& data, const MatNormParams& params);

struct WhitenedTensorDataset {
  std::vector<Tensor> z;
  std::vector<Eigen::MatrixXd> inv_sqrt;
};

WhitenedTensorDataset whiten(const TensorDataset& data, const TensorNormParams& params);

}  // namespace psmm
