#include "psmm/dataset.hpp"

#include <string>

#include "psmm/error.hpp"

namespace psmm {

namespace {

void check_responses(const std::optional<VectorXd>& responses, Index n) {
  if (!responses) return;
  require(responses->size() == n,
          "responses has length " + std::to_string(responses->size()) + ", expected " +
              std::to_string(n),
          ErrorKind::DimensionMismatch);
  require(responses->allFinite(), "responses contain non-finite values");
}

}  // namespace

MatrixDataset::MatrixDataset(std::vector<MatrixXd> samples, std::optional<VectorXd> responses)
    : samples_(std::move(samples)), responses_(std::move(responses)) {
  require(!samples_.empty(), "dataset is empty");
  const Index d1 = samples_.front().rows();
  const Index d2 = samples_.front().cols();
  require(d1 >= 1 && d2 >= 1, "sample matrices must be non-empty");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    require(samples_[i].rows() == d1 && samples_[i].cols() == d2,
            "sample " + std::to_string(i) + " has a different shape",
            ErrorKind::DimensionMismatch);
    require(samples_[i].allFinite(), "sample " + std::to_string(i) + " has non-finite entries");
  }
  check_responses(responses_, n());
}

const VectorXd& MatrixDataset::responses() const {
  require(responses_.has_value(), "dataset has no responses");
  return *responses_;
}

MatrixDataset MatrixDataset::transposed() const {
  std::vector<MatrixXd> t;
  t.reserve(samples_.size());
  for (const auto& s : samples_) t.emplace_back(s.transpose());
  return MatrixDataset(std::move(t), responses_);
}

TensorDataset::TensorDataset(std::vector<Tensor> samples, std::optional<VectorXd> responses)
    : samples_(std::move(samples)), responses_(std::move(responses)) {
  require(!samples_.empty(), "dataset is empty");
  require(samples_.front().order() >= 2, "tensor samples need order K >= 2");
  const auto& dims = samples_.front().dims();
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    require(samples_[i].dims() == dims, "sample " + std::to_string(i) + " has a different shape",
            ErrorKind::DimensionMismatch);
    require(samples_[i].values().allFinite(),
            "sample " + std::to_string(i) + " has non-finite entries");
  }
  check_responses(responses_, n());
}

TensorDataset TensorDataset::from_matrices(const MatrixDataset& data) {
  std::vector<Tensor> t;
  t.reserve(static_cast<std::size_t>(data.n()));
  for (const auto& s : data.samples()) t.push_back(Tensor::from_matrix(s));
  return TensorDataset(std::move(t), data.maybe_responses());
}

MatrixDataset TensorDataset::to_matrices() const {
  require(order() == 2, "dataset has order " + std::to_string(order()) + ", expected a matrix",
          ErrorKind::DimensionMismatch);
  std::vector<MatrixXd> m;
  m.reserve(samples_.size());
  for (const auto& s : samples_) m.push_back(s.to_matrix());
  return MatrixDataset(std::move(m), responses_);
}

const VectorXd& TensorDataset::responses() const {
  require(responses_.has_value(), "dataset has no responses");
  return *responses_;
}

}  // namespace psmm
