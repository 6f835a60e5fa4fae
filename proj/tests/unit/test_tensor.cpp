#include "doctest.h"
#include "oracles.hpp"
#include "psmm/dataset.hpp"
#include "psmm/error.hpp"
#include "psmm/tensor.hpp"

#include <cmath>
#include <limits>

using namespace psmm;

namespace {

Tensor random_tensor(std::vector<Index> dims, std::mt19937_64& rng) {
  Tensor t(dims);
  t.values() = oracle::gaussian(t.size(), 1, rng);
  return t;
}

}  // namespace

TEST_CASE("order-2 tensors share the column-major matrix layout") {
  std::mt19937_64 rng(1);
  const MatrixXd m = oracle::gaussian(3, 4, rng);
  const Tensor t = Tensor::from_matrix(m);
  CHECK(t.dims() == std::vector<Index>{3, 4});
  const std::array<Index, 2> idx{2, 1};
  CHECK(t(idx) == m(2, 1));
  CHECK(t.to_matrix() == m);
  CHECK(t.unfold(0) == m);
  CHECK(t.unfold(1) == m.transpose());
}

TEST_CASE("fold inverts unfold on every mode") {
  std::mt19937_64 rng(2);
  const Tensor t = random_tensor({2, 3, 4}, rng);
  for (Index k = 0; k < 3; ++k) {
    const Tensor back = Tensor::fold(t.unfold(k), k, t.dims());
    CHECK(back.values() == t.values());
  }
}

TEST_CASE("mode product matches an index loop") {
  std::mt19937_64 rng(3);
  const Tensor t = random_tensor({2, 3, 4}, rng);
  const MatrixXd m = oracle::gaussian(5, 3, rng);
  const Tensor p = t.mode_product(1, m);
  CHECK(p.dims() == std::vector<Index>{2, 5, 4});
  for (Index i = 0; i < 2; ++i)
    for (Index a = 0; a < 5; ++a)
      for (Index k = 0; k < 4; ++k) {
        double s = 0.0;
        for (Index j = 0; j < 3; ++j) {
          const std::array<Index, 3> idx{i, j, k};
          s += m(a, j) * t(idx);
        }
        const std::array<Index, 3> out{i, a, k};
        CHECK(p(out) == doctest::Approx(s).epsilon(1e-12));
      }
}

TEST_CASE("contraction of an order-2 tensor is u'Xv") {
  std::mt19937_64 rng(4);
  const MatrixXd x = oracle::gaussian(3, 5, rng);
  const std::vector<VectorXd> uv{oracle::gaussian(3, 1, rng), oracle::gaussian(5, 1, rng)};
  const double expect = uv[0].dot(x * uv[1]);
  CHECK(contract_all(Tensor::from_matrix(x), uv) == doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("contraction against e1 on every mode extracts the first entry") {
  std::mt19937_64 rng(5);
  const Tensor t = random_tensor({3, 2, 4}, rng);
  std::vector<VectorXd> e;
  for (Index d : t.dims()) e.push_back(VectorXd::Unit(d, 0));
  CHECK(contract_all(t, e) == t.values()[0]);
}

TEST_CASE("order-3 contraction matches the triple loop") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<Index> dims{2 + trial % 3, 3 + trial % 2, 4};
    const Tensor t = random_tensor(dims, rng);
    std::vector<VectorXd> u;
    for (Index d : dims) u.push_back(oracle::gaussian(d, 1, rng));
    const double loop = oracle::triple_loop(t.values(), dims, u[0], u[1], u[2]);
    CHECK(std::abs(contract_all(t, u) - loop) <= 1e-12 * std::max(1.0, std::abs(loop)));

    for (Index skip = 0; skip < 3; ++skip) {
      const VectorXd free = mode_k_contract(t, u, skip);
      REQUIRE(free.size() == dims[static_cast<std::size_t>(skip)]);
      // Contracting the free mode afterwards reproduces the full contraction.
      CHECK(std::abs(free.dot(u[static_cast<std::size_t>(skip)]) - loop) <=
            1e-12 * std::max(1.0, std::abs(loop)));
    }
  }
}

TEST_CASE("contraction rejects shape mismatches") {
  const Tensor t(std::vector<Index>{2, 3});
  const std::vector<VectorXd> bad{VectorXd::Ones(2), VectorXd::Ones(2)};
  CHECK_THROWS_AS(contract_all(t, bad), Error);
  const std::vector<VectorXd> short_list{VectorXd::Ones(2)};
  CHECK_THROWS_AS(contract_all(t, short_list), Error);
}

TEST_CASE("dataset constructors enforce their invariants") {
  CHECK_THROWS_AS(MatrixDataset(std::vector<MatrixXd>{}), Error);
  CHECK_THROWS_AS(MatrixDataset({MatrixXd::Zero(2, 2), MatrixXd::Zero(2, 3)}), Error);
  MatrixXd nan = MatrixXd::Zero(2, 2);
  nan(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(MatrixDataset({nan}), Error);
  CHECK_THROWS_AS(MatrixDataset({MatrixXd::Zero(2, 2)}, VectorXd::Ones(2)), Error);

  const MatrixDataset ok({MatrixXd::Ones(2, 3), MatrixXd::Zero(2, 3)}, VectorXd::Ones(2));
  CHECK(ok.transposed().rows() == 3);
  const TensorDataset t = TensorDataset::from_matrices(ok);
  CHECK(t.order() == 2);
  CHECK(t.to_matrices().sample(0) == ok.sample(0));
  CHECK_THROWS_AS(MatrixDataset({MatrixXd::Zero(2, 2)}).responses(), Error);
}
