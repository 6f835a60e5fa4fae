#include "doctest.h"
#include "psmm/cli.hpp"
#include "psmm/io.hpp"
#include "psmm/synth.hpp"
#include "tempdir.hpp"

#include <sstream>

using namespace psmm;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

/// Writes an order-2 MDS1 file from explicit samples.
void write_matrices(const std::string& path, const std::vector<MatrixXd>& xs,
                    std::optional<VectorXd> y = std::nullopt) {
  io::write_mds1(path, TensorDataset::from_matrices(MatrixDataset(xs, std::move(y))));
}

}  // namespace

TEST_CASE("simulate writes the expected byte count deterministically") {
  TempDir dir;
  const std::vector<std::string> args{"simulate", "--model", "1", "--n", "4", "--d", "2",
                                      "--seed", "3", "--output", dir.file("a.mds")};
  REQUIRE(run(args).code == 0);
  const std::string a = io::read_file(dir.file("a.mds"));
  CHECK(a.size() == a.find('\n') + 1 + 8u * 4u * (4u + 1u));

  std::vector<std::string> again = args;
  again.back() = dir.file("b.mds");
  REQUIRE(run(again).code == 0);
  CHECK(io::read_file(dir.file("b.mds")) == a);

  const Run bad = run({"simulate", "--model", "4", "--n", "4", "--d", "2", "--output", dir.file("c")});
  CHECK(bad.code == 2);
  CHECK(bad.err.find('\n') == bad.err.size() - 1);
}

TEST_CASE("fit is deterministic and validates the slice count") {
  TempDir dir;
  REQUIRE(run({"simulate", "--model", "1", "--n", "80", "--d", "3", "--seed", "7", "--output",
               dir.file("m1.mds"), "--truth", dir.file("truth.json")})
              .code == 0);
  const std::vector<std::string> fit{"fit", "--input", dir.file("m1.mds"), "--slices", "4",
                                     "--restarts", "1", "--seed", "7", "--output", dir.file("e1.json")};
  REQUIRE(run(fit).code == 0);
  std::vector<std::string> fit2 = fit;
  fit2.back() = dir.file("e2.json");
  REQUIRE(run(fit2).code == 0);
  CHECK(io::read_file(dir.file("e1.json")) == io::read_file(dir.file("e2.json")));

  const auto doc = nlohmann::json::parse(io::read_file(dir.file("e1.json")));
  CHECK(doc.contains("row_basis"));
  CHECK(doc["config"]["seed"] == 7);
  const auto truth = nlohmann::json::parse(io::read_file(dir.file("truth.json")));
  CHECK(truth["model"] == 1);

  const Run h1 = run({"fit", "--input", dir.file("m1.mds"), "--slices", "1"});
  CHECK(h1.code == 2);
  CHECK(h1.err.find("H >= 2") != std::string::npos);

  CHECK(run({"fit", "--input", dir.file("m1.mds"), "--r1", "3"}).code == 2);
  CHECK(run({"fit", "--input", dir.file("nope.mds")}).code == 2);
  CHECK(run({"fit", "--input", dir.file("m1.mds"), "--r1", "two"}).code == 2);
  CHECK(run({"fit"}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);

  // CSV and MDS1 copies of the same data give the same estimate.
  const MatrixDataset data = io::read_dataset(dir.file("m1.mds")).to_matrices();
  std::ostringstream csv;
  io::write_csv_dataset(csv, data);
  io::write_file(dir.file("m1.csv"), csv.str());
  std::vector<std::string> fit3 = fit;
  fit3[2] = dir.file("m1.csv");
  fit3.back() = dir.file("e3.json");
  REQUIRE(run(fit3).code == 0);
  CHECK(io::read_file(dir.file("e3.json")) == io::read_file(dir.file("e1.json")));

  std::vector<std::string> psvm = fit;
  psvm.back() = dir.file("psvm.json");
  psvm.insert(psvm.end() - 2, {"--method", "psvm"});
  REQUIRE(run(psvm).code == 0);
  CHECK(nlohmann::json::parse(io::read_file(dir.file("psvm.json")))["method"] == "psvm");
}

TEST_CASE("reduce through files") {
  TempDir dir;
  MatrixXd x(2, 2);
  x << 1, 2, 2, 3;
  write_matrices(dir.file("x.mds"), {x});

  SubspaceEstimate e;
  e.row_basis = MatrixXd::Identity(2, 1);
  e.col_basis = MatrixXd::Identity(2, 2);
  e.r1 = 1;
  e.r2 = 2;
  io::write_file(dir.file("e.json"), io::estimate_to_json(e).dump());
  const Run r = run({"reduce", "--input", dir.file("x.mds"), "--model", dir.file("e.json")});
  REQUIRE(r.code == 0);
  CHECK(r.out == "sample_index,v_1_1,v_1_2\n0,1,2\n");

  e.row_basis = e.col_basis = MatrixXd::Identity(2, 2);
  e.r1 = 2;
  e.symmetric = true;
  io::write_file(dir.file("s.json"), io::estimate_to_json(e).dump());
  const Run s = run({"reduce", "--input", dir.file("x.mds"), "--model", dir.file("s.json")});
  REQUIRE(s.code == 0);
  CHECK(s.out == "sample_index,v_1_1,v_1_2,v_2_1,v_2_2,v1,v2,v3\n0,1,2,2,3,1,3,2\n");

  write_matrices(dir.file("y.mds"), {MatrixXd::Ones(3, 3)});
  CHECK(run({"reduce", "--input", dir.file("y.mds"), "--model", dir.file("e.json")}).code == 2);
  io::write_file(dir.file("empty.csv"), "x_1_1,x_1_2,x_2_1,x_2_2\n");
  CHECK(run({"reduce", "--input", dir.file("empty.csv"), "--model", dir.file("e.json")}).code == 2);
}

TEST_CASE("cov command") {
  TempDir dir;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  std::vector<MatrixXd> cols;
  for (int i = 0; i < 20; ++i) {
    MatrixXd c(3, 1);
    for (int k = 0; k < 3; ++k) c(k, 0) = nd(rng);
    cols.push_back(c);
  }
  write_matrices(dir.file("v.mds"), cols);
  const Run ok = run({"cov", "--input", dir.file("v.mds")});
  REQUIRE(ok.code == 0);
  const auto doc = nlohmann::json::parse(ok.out);
  CHECK(doc["sigma_col"] == nlohmann::json::parse("[[1.0]]"));

  std::vector<MatrixXd> wide;
  for (int i = 0; i < 3; ++i) wide.push_back(MatrixXd::Random(6, 2));
  write_matrices(dir.file("w.mds"), wide);
  const Run few = run({"cov", "--input", dir.file("w.mds")});
  CHECK(few.code == 2);
  CHECK(few.err.find("max(d1/d2, d2/d1) + 1") != std::string::npos);

  write_matrices(dir.file("same.mds"), std::vector<MatrixXd>(5, MatrixXd::Ones(2, 2)));
  const Run same = run({"cov", "--input", dir.file("same.mds")});
  CHECK(same.code == 3);
  CHECK(same.err.find("SingularCovariance") != std::string::npos);
}

TEST_CASE("benchmark command") {
  TempDir dir;
  const std::vector<std::string> base{"benchmark", "--models", "1", "--methods", "psmm,psvm",
                                      "--n", "50,70", "--d", "3", "--replicates", "2",
                                      "--slices", "4", "--restarts", "0", "--seed", "11",
                                      "--no-timing"};
  std::vector<std::string> one = base, many = base;
  one.insert(one.end(), {"--jobs", "1", "--output", dir.file("one.csv")});
  many.insert(many.end(), {"--jobs", "4", "--output", dir.file("many.csv")});
  REQUIRE(run(one).code == 0);
  REQUIRE(run(many).code == 0);
  const std::string a = io::read_file(dir.file("one.csv"));
  CHECK(a == io::read_file(dir.file("many.csv")));
  CHECK(std::count(a.begin(), a.end(), '\n') == 1 + 2 * 2 * 2);

  const Run three = run({"benchmark", "--models", "1", "--methods", "psmm", "--n", "60", "--d",
                         "3", "--replicates", "3", "--slices", "4", "--restarts", "0"});
  REQUIRE(three.code == 0);
  CHECK(std::count(three.out.begin(), three.out.end(), '\n') == 4);

  CHECK(run({"benchmark", "--n", "100:50:10"}).code == 2);
  CHECK(run({"benchmark", "--methods", "sir"}).code == 2);
}
