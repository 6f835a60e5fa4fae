#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

namespace psmm {

/// Dense order-K array stored with the first index varying fastest, so an
/// order-2 tensor shares its memory layout with an Eigen column-major matrix.
class Tensor {
 public:
  using Index = Eigen::Index;

  Tensor() = default;
  explicit Tensor(std::vector<Index> dims);
  Tensor(std::vector<Index> dims, Eigen::VectorXd values);

  static Tensor from_matrix(const Eigen::MatrixXd& m);
  Eigen::MatrixXd to_matrix() const;

  const std::vector<Index>& dims() const { return dims_; }
  Index dim(Index mode) const { return dims_[static_cast<std::size_t>(mode)]; }
  Index order() const { return static_cast<Index>(dims_.size()); }
  Index size() const { return values_.size(); }

  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }

  double operator()(std::span<const Index> index) const { return values_[offset(index)]; }
  double& operator()(std::span<const Index> index) { return values_[offset(index)]; }
  Index offset(std::span<const Index> index) const;

  /// Mode-k matricization: d_k rows, remaining modes in increasing order
  /// with the lowest one varying fastest along the columns.
  Eigen::MatrixXd unfold(Index mode) const;
  static Tensor fold(const Eigen::MatrixXd& unfolded, Index mode, std::vector<Index> dims);

  /// X x_k M for an (m x d_k) matrix M; the result has d_k replaced by m.
  Tensor mode_product(Index mode, const Eigen::MatrixXd& m) const;

  Tensor& operator+=(const Tensor& other);
  Tensor& operator-=(const Tensor& other);
  Tensor& operator*=(double s);

 private:
  std::vector<Index> dims_;
  std::vector<Index> strides_;
  Eigen::VectorXd values_;
};

/// Contract `x` against one vector per mode. With no skip the result is the
/// scalar X x_1 u_1 ... x_K u_K (returned as a length-1 vector); with
/// skip = k, mode k is left free and the result has length d_k.
Eigen::VectorXd mode_k_contract(const Tensor& x, std::span<const Eigen::VectorXd> vectors,
                                std::optional<Eigen::Index> skip = std::nullopt);

/// Scalar full contraction.
double contract_all(const Tensor& x, std::span<const Eigen::VectorXd> vectors);

Eigen::Index product(std::span<const Eigen::Index> dims);

}  // namespace psmm
