#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "psmm/tensor.hpp"

namespace psmm {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// n labeled d1 x d2 predictor matrices. The constructor enforces the
/// shape/finiteness invariants, so a live instance is always valid.
class MatrixDataset {
 public:
  MatrixDataset(std::vector<MatrixXd> samples,
                std::optional<VectorXd> responses = std::nullopt);

  Index n() const { return static_cast<Index>(samples_.size()); }
  Index rows() const { return samples_.front().rows(); }
  Index cols() const { return samples_.front().cols(); }

  const std::vector<MatrixXd>& samples() const { return samples_; }
  const MatrixXd& sample(Index i) const { return samples_[static_cast<std::size_t>(i)]; }

  bool has_responses() const { return responses_.has_value(); }
  /// Throws InvalidArgument when the dataset carries no responses.
  const VectorXd& responses() const;
  const std::optional<VectorXd>& maybe_responses() const { return responses_; }

  /// Every sample transposed; responses kept.
  MatrixDataset transposed() const;

 private:
  std::vector<MatrixXd> samples_;
  std::optional<VectorXd> responses_;
};

/// n order-K arrays (K >= 2) sharing one shape.
class TensorDataset {
 public:
  TensorDataset(std::vector<Tensor> samples,
                std::optional<VectorXd> responses = std::nullopt);

  /// Lossless K = 2 embedding of a matrix dataset.
  static TensorDataset from_matrices(const MatrixDataset& data);
  /// Inverse of from_matrices; requires order 2.
  MatrixDataset to_matrices() const;

  Index n() const { return static_cast<Index>(samples_.size()); }
  const std::vector<Index>& dims() const { return samples_.front().dims(); }
  Index order() const { return samples_.front().order(); }

  const std::vector<Tensor>& samples() const { return samples_; }
  const Tensor& sample(Index i) const { return samples_[static_cast<std::size_t>(i)]; }

  bool has_responses() const { return responses_.has_value(); }
  const VectorXd& responses() const;
  const std::optional<VectorXd>& maybe_responses() const { return responses_; }

 private:
  std::vector<Tensor> samples_;
  std::optional<VectorXd> responses_;
};

}  // namespace psmm
