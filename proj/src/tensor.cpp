#include "psmm/tensor.hpp"

#include <numeric>
#include <string>

#include "psmm/error.hpp"

namespace psmm {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Index product(std::span<const Index> dims) {
  return std::accumulate(dims.begin(), dims.end(), Index{1}, std::multiplies<>());
}

namespace {

std::vector<Index> strides_for(const std::vector<Index>& dims) {
  std::vector<Index> strides(dims.size());
  Index s = 1;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    strides[k] = s;
    s *= dims[k];
  }
  return strides;
}

void check_dims(const std::vector<Index>& dims) {
  require(!dims.empty(), "tensor needs at least one mode");
  for (Index d : dims) require(d >= 1, "tensor mode sizes must be positive");
}

}  // namespace

Tensor::Tensor(std::vector<Index> dims)
    : dims_(std::move(dims)), strides_(strides_for(dims_)) {
  check_dims(dims_);
  values_ = VectorXd::Zero(product(dims_));
}

Tensor::Tensor(std::vector<Index> dims, VectorXd values)
    : dims_(std::move(dims)), strides_(strides_for(dims_)), values_(std::move(values)) {
  check_dims(dims_);
  require(values_.size() == product(dims_), "tensor value count does not match its shape",
          ErrorKind::DimensionMismatch);
}

Tensor Tensor::from_matrix(const MatrixXd& m) {
  return Tensor({m.rows(), m.cols()}, Eigen::Map<const VectorXd>(m.data(), m.size()));
}

MatrixXd Tensor::to_matrix() const {
  require(order() == 2, "to_matrix requires an order-2 tensor", ErrorKind::DimensionMismatch);
  return Eigen::Map<const MatrixXd>(values_.data(), dims_[0], dims_[1]);
}

Index Tensor::offset(std::span<const Index> index) const {
  Index off = 0;
  for (std::size_t k = 0; k < dims_.size(); ++k) off += index[k] * strides_[k];
  return off;
}

MatrixXd Tensor::unfold(Index mode) const {
  const auto k = static_cast<std::size_t>(mode);
  const Index dk = dims_[k];
  const Index inner = strides_[k];        // product of modes before k
  const Index outer = size() / (inner * dk);  // product of modes after k
  MatrixXd out(dk, inner * outer);
  for (Index o = 0; o < outer; ++o)
    for (Index i = 0; i < dk; ++i)
      for (Index j = 0; j < inner; ++j)
        out(i, o * inner + j) = values_[o * inner * dk + i * inner + j];
  return out;
}

Tensor Tensor::fold(const MatrixXd& unfolded, Index mode, std::vector<Index> dims) {
  Tensor t(std::move(dims));
  const auto k = static_cast<std::size_t>(mode);
  const Index dk = t.dims_[k];
  const Index inner = t.strides_[k];
  const Index outer = t.size() / (inner * dk);
  require(unfolded.rows() == dk && unfolded.cols() == inner * outer,
          "unfolded matrix shape does not match target dims", ErrorKind::DimensionMismatch);
  for (Index o = 0; o < outer; ++o)
    for (Index i = 0; i < dk; ++i)
      for (Index j = 0; j < inner; ++j)
        t.values_[o * inner * dk + i * inner + j] = unfolded(i, o * inner + j);
  return t;
}

Tensor Tensor::mode_product(Index mode, const MatrixXd& m) const {
  require(mode >= 0 && mode < order(), "mode out of range");
  require(m.cols() == dim(mode), "mode product: matrix columns must equal d_k",
          ErrorKind::DimensionMismatch);
  std::vector<Index> out_dims = dims_;
  out_dims[static_cast<std::size_t>(mode)] = m.rows();
  return fold(m * unfold(mode), mode, std::move(out_dims));
}

Tensor& Tensor::operator+=(const Tensor& other) {
  require(dims_ == other.dims_, "tensor shapes differ", ErrorKind::DimensionMismatch);
  values_ += other.values_;
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
  require(dims_ == other.dims_, "tensor shapes differ", ErrorKind::DimensionMismatch);
  values_ -= other.values_;
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  values_ *= s;
  return *this;
}

VectorXd mode_k_contract(const Tensor& x, std::span<const VectorXd> vectors,
                         std::optional<Index> skip) {
  const Index order = x.order();
  require(static_cast<Index>(vectors.size()) == order,
          "mode_k_contract needs one vector per mode", ErrorKind::DimensionMismatch);
  for (Index k = 0; k < order; ++k) {
    if (skip && *skip == k) continue;
    require(vectors[static_cast<std::size_t>(k)].size() == x.dim(k),
            "contraction vector length differs from mode size " + std::to_string(k + 1),
            ErrorKind::DimensionMismatch);
  }
  if (skip) require(*skip >= 0 && *skip < order, "skip mode out of range");

  // Contract the highest mode first: the remaining tensor stays a prefix
  // block of the column-major layout, so each step is a matrix-vector product.
  VectorXd work = x.values();
  Index remaining = x.size();
  for (Index k = order - 1; k >= 0; --k) {
    const Index dk = x.dim(k);
    const Index inner = remaining / dk;
    Eigen::Map<const MatrixXd> block(work.data(), inner, dk);
    if (skip && *skip == k) {
      // Each column of `block` is one mode-k slice; contract its lower modes.
      VectorXd result(dk);
      for (Index i = 0; i < dk; ++i) {
        VectorXd slice = block.col(i);
        Index rem = inner;
        for (Index j = k - 1; j >= 0; --j) {
          const Index dj = x.dim(j);
          Eigen::Map<const MatrixXd> b(slice.data(), rem / dj, dj);
          VectorXd next = b * vectors[static_cast<std::size_t>(j)];
          slice = std::move(next);
          rem /= dj;
        }
        result[i] = slice[0];
      }
      return result;
    }
    VectorXd next = block * vectors[static_cast<std::size_t>(k)];
    work = std::move(next);
    remaining = inner;
  }
  return work;  // length 1
}

double contract_all(const Tensor& x, std::span<const VectorXd> vectors) {
  return mode_k_contract(x, vectors)[0];
}

}  // namespace psmm
