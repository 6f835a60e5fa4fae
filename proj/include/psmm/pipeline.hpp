#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "psmm/dataset.hpp"
#include "psmm/linalg.hpp"
#include "psmm/matnorm.hpp"
#include "psmm/smm.hpp"

namespace psmm {

struct PsmmConfig {
  int slices = 10;
  double lambda = 100.0;
  FlipFlopOptions flipflop;
  double smm_tol = 1e-6;
  int smm_max_iter = 100;
  int restarts = 2;
  /// KKT tolerance of the per-update dual QPs.
  double qp_tol = 1e-6;
  /// Fixed structural dimensions; unset means BIC selection.
  std::optional<int> r1;
  std::optional<int> r2;
  /// Per-mode fixed ranks for tensors. A missing or unset entry falls back
  /// to r1 / r2 for the first two modes and to BIC otherwise.
  std::vector<std::optional<int>> mode_ranks;
  /// Fixed rank for the vectorized baseline; defaults to r1 * r2 when both are fixed.
  std::optional<int> vector_rank;
  std::uint64_t seed = 0;
  bool symmetric = false;

  /// Throws InvalidArgument on H < 2, lambda <= 0 or a rank outside [1, d).
  void validate() const;
  void validate_dims(Eigen::Index d1, Eigen::Index d2) const;
  SmmOptions smm_options(std::uint64_t slice_seed) const;
};

struct SliceLabelSet {
  std::vector<double> cutpoints;   // q_h for h = 1..H
  std::vector<int> retained;       // 1-based slice indices
  std::vector<Eigen::VectorXd> labels;  // one per retained slice
};

/// q_h is the ceil(n h / H)-th order statistic; y_i = +1 iff Y_i > q_h.
/// Slices with fewer than two members in either class are dropped.
SliceLabelSet slice_labels(const Eigen::VectorXd& responses, int slices);

struct CandidateAggregate {
  Eigen::MatrixXd u_hat;
  Eigen::MatrixXd v_hat;
  SortedEigen row;
  SortedEigen col;
};

CandidateAggregate aggregate_directions(const std::vector<DirectionTriple>& triples);

/// argmax_r sum_{i<=r} lambda_i - lambda_1 n^{-1/2} r over r in [1, len];
/// ties go to the smaller r.
int select_dimension_bic(const Eigen::VectorXd& eigenvalues, Eigen::Index n);

struct SliceSummary {
  int slice = 0;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct SubspaceEstimate {
  Eigen::MatrixXd row_basis;
  Eigen::MatrixXd col_basis;
  Eigen::VectorXd eigvals_row;
  Eigen::VectorXd eigvals_col;
  int r1 = 0;
  int r2 = 0;
  bool symmetric = false;
  PsmmConfig config;
  std::vector<SliceSummary> convergence;
};

struct TensorSubspaceEstimate {
  std::vector<Eigen::MatrixXd> bases;
  std::vector<Eigen::VectorXd> eigvals;
  std::vector<int> ranks;
  PsmmConfig config;
  std::vector<SliceSummary> convergence;
};

SubspaceEstimate fit_psmm(const MatrixDataset& data, const PsmmConfig& config);
TensorSubspaceEstimate fit_pstm(const TensorDataset& data, const PsmmConfig& config);

/// Vectorized principal SVM: the basis lives in R^{d1 d2} (column-major
/// vec) and is returned as row_basis with col_basis = [1].
SubspaceEstimate fit_psvm_baseline(const MatrixDataset& data, const PsmmConfig& config);

struct ReducedFeatures {
  /// r1 x r2 per sample.
  std::vector<Eigen::MatrixXd> coordinates;
  /// (u1'X u1, u2'X u2, u1'X u2) in symmetric mode with r = 2.
  std::optional<std::vector<std::array<double, 3>>> symmetric_triples;
};

ReducedFeatures reduce(const MatrixDataset& data, const SubspaceEstimate& estimate);

/// Tensor reduction X x_1 B_1' ... x_K B_K', one tensor per sample.
std::vector<Tensor> reduce(const TensorDataset& data, const TensorSubspaceEstimate& estimate);

}  // namespace psmm
