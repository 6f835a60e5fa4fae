#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "psmm/dataset.hpp"
#include "psmm/matnorm.hpp"
#include "psmm/qp.hpp"

namespace psmm {

struct SmmOptions {
  double lambda = 100.0;
  double tol = 1e-6;
  int max_iter = 100;
  int restarts = 2;
  std::uint64_t seed = 0;
  double qp_tol = 1e-6;
};

/// One per-slice solution of the rank-1 support matrix machine.
struct DirectionTriple {
  Eigen::VectorXd u;
  Eigen::VectorXd v;
  double t = 0.0;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Objective after each single-direction update of the winning start.
  std::vector<double> objective_trace;
};

/// Result of minimizing over one direction block (plus the intercept).
struct DirectionUpdate {
  Eigen::VectorXd direction;
  double t = 0.0;
  double objective = 0.0;
  SvmDualSolution qp;
};

/// Centered samples and covariance inverses shared by every slice fit on a
/// dataset.
class SmmContext {
 public:
  SmmContext(const MatrixDataset& data, const MatNormParams& params);

  Eigen::Index n() const { return static_cast<Eigen::Index>(centered_.size()); }
  Eigen::Index rows() const { return params_.rows(); }
  Eigen::Index cols() const { return params_.cols(); }
  const std::vector<Eigen::MatrixXd>& centered() const { return centered_; }
  const MatNormParams& params() const { return params_; }
  const Eigen::LLT<Eigen::MatrixXd>& row_llt() const { return row_llt_; }
  const Eigen::LLT<Eigen::MatrixXd>& col_llt() const { return col_llt_; }

 private:
  std::vector<Eigen::MatrixXd> centered_;
  MatNormParams params_;
  Eigen::LLT<Eigen::MatrixXd> row_llt_;
  Eigen::LLT<Eigen::MatrixXd> col_llt_;
};

/// Rank-1 SMM for one label vector:
///   (u' S_r u)(v' S_c v) + (lambda/n) sum_i {1 - y_i (u' (X_i - Xbar) v - t)}_+
/// minimized by alternating exact convex block updates through the dual QP.
class Rank1Smm {
 public:
  Rank1Smm(std::shared_ptr<const SmmContext> context, Eigen::VectorXd labels, double lambda,
           double qp_tol = 1e-6);

  double objective(const Eigen::VectorXd& u, const Eigen::VectorXd& v, double t) const;

  /// Minimizer over (u, t) for fixed v. The dual kernel is the (i, j)
  /// cross-kernel ((X_i - Xbar) v)' S_r^{-1} ((X_j - Xbar) v) / (v' S_c v).
  DirectionUpdate update_u(const Eigen::VectorXd& v, const SmoOptions& smo = {}) const;
  /// Minimizer over (v, t) for fixed u (transposed roles).
  DirectionUpdate update_v(const Eigen::VectorXd& u, const SmoOptions& smo = {}) const;

  /// Top singular pair of the whitened label-weighted mean difference,
  /// mapped back to the original coordinates; falls back to the leading
  /// covariance eigenvectors when that difference vanishes.
  std::pair<Eigen::VectorXd, Eigen::VectorXd> init_directions() const;

  /// Coordinate descent from the deterministic start plus `restarts` seeded
  /// random starts; returns the lowest-objective, norm-balanced triple.
  DirectionTriple fit(const SmmOptions& options) const;

  /// Descent from one given start.
  DirectionTriple descend(const Eigen::VectorXd& u0, const Eigen::VectorXd& v0,
                          const SmmOptions& options) const;

  const Eigen::VectorXd& labels() const { return labels_; }

 private:
  std::shared_ptr<const SmmContext> context_;
  Eigen::VectorXd labels_;
  double lambda_;
  double qp_tol_;
};

/// Free-function forms of the Rank1Smm operations.
double objective_eval(const Eigen::VectorXd& u, const Eigen::VectorXd& v, double t,
                      const MatrixDataset& data, const Eigen::VectorXd& labels,
                      const MatNormParams& params, double lambda);
DirectionUpdate update_u(const MatrixDataset& data, const Eigen::VectorXd& labels,
                         const Eigen::VectorXd& v, const MatNormParams& params, double lambda);
DirectionUpdate update_v(const MatrixDataset& data, const Eigen::VectorXd& labels,
                         const Eigen::VectorXd& u, const MatNormParams& params, double lambda);
std::pair<Eigen::VectorXd, Eigen::VectorXd> init_directions(const MatrixDataset& data,
                                                            const Eigen::VectorXd& labels,
                                                            const MatNormParams& params);
DirectionTriple fit_rank1_smm(const MatrixDataset& data, const Eigen::VectorXd& labels,
                              const MatNormParams& params, const SmmOptions& options);

/// Rescale (u, v) -> (c u, v / c) so both norms agree; u v' is unchanged.
void balance_norms(Eigen::VectorXd& u, Eigen::VectorXd& v);
void balance_norms(std::vector<Eigen::VectorXd>& directions);

/// Throws InfeasibleLabels unless each class has at least `min_per_class` members.
void check_labels(const Eigen::VectorXd& labels, Eigen::Index min_per_class);

// ---------------------------------------------------------------------------
// Order-K tensors.

struct TensorDirectionSet {
  std::vector<Eigen::VectorXd> u;
  double t = 0.0;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;
};

class TensorSmmContext {
 public:
  TensorSmmContext(const TensorDataset& data, const TensorNormParams& params);

  Eigen::Index n() const { return static_cast<Eigen::Index>(centered_.size()); }
  Eigen::Index order() const { return static_cast<Eigen::Index>(params_.sigmas.size()); }
  const std::vector<Eigen::Index>& dims() const { return params_.mean.dims(); }
  const std::vector<Tensor>& centered() const { return centered_; }
  const TensorNormParams& params() const { return params_; }
  const Eigen::LLT<Eigen::MatrixXd>& llt(Eigen::Index mode) const {
    return llts_[static_cast<std::size_t>(mode)];
  }

 private:
  std::vector<Tensor> centered_;
  TensorNormParams params_;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> llts_;
};

/// Rank-1 support tensor machine: prod_k (u_k' S_k u_k) plus the hinge on
/// the full contraction, minimized by cyclic mode updates.
class Rank1Stm {
 public:
  Rank1Stm(std::shared_ptr<const TensorSmmContext> context, Eigen::VectorXd labels, double lambda,
           double qp_tol = 1e-6);

  double objective(const std::vector<Eigen::VectorXd>& u, double t) const;
  DirectionUpdate update_mode(Eigen::Index mode, const std::vector<Eigen::VectorXd>& u,
                              const SmoOptions& smo = {}) const;
  std::vector<Eigen::VectorXd> init_directions() const;
  TensorDirectionSet fit(const SmmOptions& options) const;
  TensorDirectionSet descend(std::vector<Eigen::VectorXd> start, const SmmOptions& options) const;

 private:
  std::shared_ptr<const TensorSmmContext> context_;
  Eigen::VectorXd labels_;
  double lambda_;
  double qp_tol_;
};

TensorDirectionSet fit_rank1_stm(const TensorDataset& data, const Eigen::VectorXd& labels,
                                 const TensorNormParams& params, const SmmOptions& options);

}  // namespace psmm
