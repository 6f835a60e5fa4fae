#include "doctest.h"
#include "oracles.hpp"
#include "psmm/error.hpp"
#include "psmm/io.hpp"
#include "psmm/synth.hpp"
#include "tempdir.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

using namespace psmm;

namespace {

std::string to_mds1(const TensorDataset& data) {
  std::ostringstream out;
  io::write_mds1(out, data);
  return out.str();
}

TensorDataset from_string(const std::string& text, bool csv) {
  std::istringstream in(text);
  return csv ? io::read_csv_dataset(in) : io::read_mds1(in);
}

void check_same(const TensorDataset& a, const TensorDataset& b) {
  REQUIRE(a.n() == b.n());
  REQUIRE(a.dims() == b.dims());
  for (Index i = 0; i < a.n(); ++i) CHECK(a.sample(i).values() == b.sample(i).values());
  REQUIRE(a.has_responses() == b.has_responses());
  if (a.has_responses()) CHECK(a.responses() == b.responses());
}

}  // namespace

TEST_CASE("MDS1 round trip is bitwise") {
  const SyntheticInstance inst = gen_model(1, 7, 3, 0.2, 1);
  const TensorDataset data = TensorDataset::from_matrices(inst.dataset);
  const std::string bytes = to_mds1(data);
  check_same(data, from_string(bytes, false));

  const std::size_t header = bytes.find('\n') + 1;
  CHECK(bytes.size() == header + 8u * 7u * (9u + 1u));

  // Row-major order within a sample: the second stored value is x(0, 1).
  double second = 0.0;
  std::memcpy(&second, bytes.data() + header + 8, 8);
  CHECK(second == inst.dataset.sample(0)(0, 1));
}

TEST_CASE("MDS1 carries order-3 tensors and missing responses") {
  std::mt19937_64 rng(2);
  std::vector<Tensor> xs;
  for (int i = 0; i < 3; ++i) {
    Tensor t(std::vector<Index>{2, 3, 2});
    t.values() = oracle::gaussian(12, 1, rng);
    xs.push_back(t);
  }
  const TensorDataset data(xs);
  check_same(data, from_string(to_mds1(data), false));
}

TEST_CASE("malformed MDS1 input") {
  const TensorDataset data = TensorDataset::from_matrices(gen_model(1, 3, 2, 0.2, 1).dataset);
  const std::string good = to_mds1(data);
  CHECK_THROWS_AS(from_string(good.substr(0, good.size() - 3), false), Error);
  CHECK_THROWS_AS(from_string(good + "x", false), Error);
  CHECK_THROWS_AS(from_string("{\"format\":\"MDS2\"}\n", false), Error);
  CHECK_THROWS_AS(from_string("not json\n", false), Error);
  try {
    from_string("", false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}

TEST_CASE("CSV datasets") {
  const std::string text =
      "y,x_1_1,x_1_2,x_2_1,x_2_2\n"
      "0.5,1,2,3,4\n"
      "-1.25,5,6,7,8e-3\n";
  const TensorDataset data = from_string(text, true);
  CHECK(data.n() == 2);
  CHECK(data.dims() == std::vector<Index>{2, 2});
  const MatrixXd x = data.to_matrices().sample(1);
  CHECK(x(0, 1) == 6.0);
  CHECK(x(1, 0) == 7.0);
  CHECK(x(1, 1) == 8e-3);
  CHECK(data.responses()[1] == -1.25);

  CHECK_THROWS_AS(from_string("y,x_1_1\n1,abc\n", true), Error);
  CHECK_THROWS_AS(from_string("y,x_1_1,x_1_2\n1,2\n", true), Error);
  CHECK_THROWS_AS(from_string("y,x_1_2,x_1_1\n1,2,3\n", true), Error);
  CHECK_THROWS_AS(from_string("y\n", true), Error);

  // CSV written from a dataset reads back bitwise.
  const SyntheticInstance inst = gen_model(2, 5, 3, 0.2, 3);
  std::ostringstream out;
  io::write_csv_dataset(out, inst.dataset);
  check_same(TensorDataset::from_matrices(inst.dataset), from_string(out.str(), true));
}

TEST_CASE("read_dataset dispatches on content") {
  TempDir dir;
  const SyntheticInstance inst = gen_model(1, 6, 2, 0.2, 4);
  const TensorDataset data = TensorDataset::from_matrices(inst.dataset);
  io::write_mds1(dir.file("a.mds"), data);
  std::ostringstream csv;
  io::write_csv_dataset(csv, inst.dataset);
  io::write_file(dir.file("a.csv"), csv.str());
  check_same(io::read_dataset(dir.file("a.mds")), io::read_dataset(dir.file("a.csv")));
  CHECK_THROWS_AS(io::read_dataset(dir.file("missing")), Error);
}

TEST_CASE("estimate JSON round trip") {
  const SyntheticInstance inst = gen_model(1, 80, 3, 0.2, 5);
  PsmmConfig c;
  c.slices = 4;
  c.restarts = 0;
  c.r2 = 2;
  const SubspaceEstimate e = fit_psmm(inst.dataset, c);
  const nlohmann::json doc = io::estimate_to_json(e);
  CHECK(doc["selected_dims"] == nlohmann::json::array({e.r1, e.r2}));
  CHECK(doc["config"]["r1"] == "auto");
  const auto back = std::get<SubspaceEstimate>(io::estimate_from_json(nlohmann::json::parse(doc.dump())));
  CHECK(back.row_basis == e.row_basis);
  CHECK(back.col_basis == e.col_basis);
  CHECK(back.eigvals_row == e.eigvals_row);
  CHECK(back.config.r2 == 2);
  CHECK_FALSE(back.config.r1);
  CHECK(back.config.slices == 4);

  TensorSubspaceEstimate t;
  t.bases = {MatrixXd::Identity(3, 1), MatrixXd::Ones(1, 1)};
  t.eigvals = {VectorXd::Ones(3), VectorXd::Ones(1)};
  t.ranks = {1, 1};
  const auto tb = std::get<TensorSubspaceEstimate>(io::estimate_from_json(io::estimate_to_json(t)));
  CHECK(tb.bases[0] == t.bases[0]);
  CHECK(tb.ranks == t.ranks);

  CHECK_THROWS_AS(io::estimate_from_json(nlohmann::json::object()), Error);
}

TEST_CASE("double formatting round-trips") {
  std::mt19937_64 rng(6);
  const VectorXd v = oracle::gaussian(50, 1, rng) * 1e3;
  for (Index i = 0; i < v.size(); ++i) CHECK(std::stod(io::format_double(v[i])) == v[i]);
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(io::format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(io::format_double(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("benchmark CSV layout") {
  BenchmarkResult r;
  BenchmarkRow row;
  row.model_id = 2;
  row.method = Method::Psvm;
  row.n = 100;
  row.d = 5;
  row.distance = 0.25;
  row.r1 = 4;
  row.r2 = 1;
  r.rows.push_back(row);
  std::ostringstream out;
  io::write_benchmark_csv(out, r);
  CHECK(out.str() ==
        "model,method,n,d,replicate,distance,runtime_seconds,r1,r2,status\n"
        "2,psvm,100,5,0,0.25,0,4,1,ok\n");
}
