#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "psmm/dataset.hpp"
#include "psmm/pipeline.hpp"
#include "psmm/seed.hpp"

namespace psmm {

/// X_i = mean + S_r^{1/2} G_i S_c^{1/2} with G_i i.i.d. N(0, 1) entries.
MatrixDataset sample_matrix_normal(Eigen::Index n, const Eigen::MatrixXd& mean,
                                   const Eigen::MatrixXd& sigma_row,
                                   const Eigen::MatrixXd& sigma_col, std::uint64_t seed);

struct SyntheticInstance {
  MatrixDataset dataset;
  Eigen::MatrixXd true_row_basis;
  Eigen::MatrixXd true_col_basis;
  int model_id = 0;
  std::uint64_t seed = 0;
  double noise_sd = 0.0;
  Eigen::VectorXd noise;
};

/// Noise-free response of the benchmark models 1-3 (X_11 is x(0, 0)).
double model_response(int model_id, const Eigen::MatrixXd& x);

/// X ~ MN(0, I_d, I_d) and Y from model 1, 2 or 3 plus N(0, noise_sd^2).
SyntheticInstance gen_model(int model_id, Eigen::Index n, Eigen::Index d, double noise_sd,
                            std::uint64_t seed);

/// Y = u0' X v0 + noise with X ~ MN(0, I, I); u0, v0 are normalized.
SyntheticInstance gen_rank1_linear(Eigen::Index n, const Eigen::VectorXd& u0,
                                   const Eigen::VectorXd& v0, double noise_sd,
                                   std::uint64_t seed);

struct SyntheticTensorInstance {
  TensorDataset dataset;
  std::vector<Eigen::MatrixXd> true_bases;
  Eigen::VectorXd noise;
};

/// Y = X x_1 u_1 ... x_K u_K + noise with i.i.d. N(0, 1) tensor entries.
SyntheticTensorInstance gen_tensor_rank1(Eigen::Index n, const std::vector<Eigen::VectorXd>& u,
                                         double noise_sd, std::uint64_t seed);

/// ||P_a - P_b||_F for the projectors onto span(C_a (x) R_a) and
/// span(C_b (x) R_b). Uses explicit projectors when d1 d2 <= 1024 and the
/// cross-Gram identity otherwise.
double subspace_distance(const Eigen::MatrixXd& row_a, const Eigen::MatrixXd& col_a,
                         const Eigen::MatrixXd& row_b, const Eigen::MatrixXd& col_b);
double subspace_distance_explicit(const Eigen::MatrixXd& row_a, const Eigen::MatrixXd& col_a,
                                  const Eigen::MatrixXd& row_b, const Eigen::MatrixXd& col_b);
double subspace_distance_gram(const Eigen::MatrixXd& row_a, const Eigen::MatrixXd& col_a,
                              const Eigen::MatrixXd& row_b, const Eigen::MatrixXd& col_b);

/// Projector distance between two spans of the same ambient space.
double projector_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

enum class Method { Psmm, Psvm };
std::string to_string(Method m);
Method parse_method(const std::string& name);

struct BenchmarkRow {
  int model_id = 0;
  Method method = Method::Psmm;
  Eigen::Index n = 0;
  Eigen::Index d = 0;
  int replicate = 0;
  double distance = 0.0;
  double runtime_seconds = 0.0;
  int r1 = 0;
  int r2 = 0;
  std::string status = "ok";
};

struct BenchmarkResult {
  std::vector<BenchmarkRow> rows;
};

struct BenchmarkSpec {
  std::vector<int> models{1, 2, 3};
  std::vector<Method> methods{Method::Psmm, Method::Psvm};
  std::vector<Eigen::Index> n_grid{100, 200, 300, 400, 500};
  std::vector<Eigen::Index> d_grid{5, 10};
  int replicates = 20;
  double noise_sd = 0.2;
  /// Fit with each model's true (r1, r2) instead of BIC selection.
  bool true_dims = false;
  bool record_runtime = true;
  int jobs = 1;
};

/// Rows come back in canonical (model, method, d, n, replicate) order.
/// Replicate data depend only on (seed, model, d, n, replicate), so every
/// method sees the same instance. Fit failures become status markers.
BenchmarkResult run_benchmark(const BenchmarkSpec& spec, const PsmmConfig& config,
                              std::uint64_t seed);

}  // namespace psmm
