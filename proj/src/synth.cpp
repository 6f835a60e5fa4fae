#include "psmm/synth.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <thread>

#include "psmm/error.hpp"
#include "psmm/linalg.hpp"

namespace psmm {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixDataset sample_matrix_normal(Index n, const MatrixXd& mean, const MatrixXd& sigma_row,
                                   const MatrixXd& sigma_col, std::uint64_t seed) {
  require(n >= 1, "sample_matrix_normal needs n >= 1");
  require(sigma_row.rows() == mean.rows() && sigma_col.rows() == mean.cols(),
          "covariance factors do not match the mean shape", ErrorKind::DimensionMismatch);
  const MatrixXd row_root = sym_sqrt(sigma_row);
  const MatrixXd col_root = sym_sqrt(sigma_col);
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<MatrixXd> samples;
  samples.reserve(static_cast<std::size_t>(n));
  MatrixXd g(mean.rows(), mean.cols());
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < g.size(); ++j) g.data()[j] = normal(rng);
    samples.push_back(mean + row_root * g * col_root);
  }
  return MatrixDataset(std::move(samples));
}

double model_response(int model_id, const MatrixXd& x) {
  require(x.rows() >= 2 && x.cols() >= 2, "benchmark models need d >= 2");
  const double x11 = x(0, 0);
  const double x12 = x(0, 1);
  const double x21 = x(1, 0);
  switch (model_id) {
    case 1:
      return std::exp(x11) + x12;
    case 2:
      return x11 / (0.5 + (x12 + 1.0) * (x12 + 1.0));
    case 3:
      return x11 * (x12 + x21 + 1.0) + x11;
    default:
      fail(ErrorKind::InvalidArgument,
           "model id must be 1, 2 or 3 (got " + std::to_string(model_id) + ")");
  }
}

namespace {

MatrixXd unit_columns(Index d, Index r) { return MatrixXd::Identity(d, r); }

SyntheticInstance assemble(const MatrixDataset& predictors, VectorXd noise,
                           const std::function<double(const MatrixXd&)>& signal) {
  VectorXd y(predictors.n());
  for (Index i = 0; i < predictors.n(); ++i) y[i] = signal(predictors.sample(i)) + noise[i];
  return SyntheticInstance{MatrixDataset(predictors.samples(), y), {}, {}, 0, 0, 0.0,
                           std::move(noise)};
}

VectorXd draw_noise(Index n, double sd, std::uint64_t seed) {
  Rng rng(seed);
  return sd * standard_normal_vector(n, rng);
}

}  // namespace

SyntheticInstance gen_model(int model_id, Index n, Index d, double noise_sd, std::uint64_t seed) {
  require(model_id >= 1 && model_id <= 3,
          "model id must be 1, 2 or 3 (got " + std::to_string(model_id) + ")");
  require(d >= 2, "benchmark models need d >= 2");
  require(n >= 1, "n must be at least 1");
  require(noise_sd >= 0.0, "noise sd must be non-negative");
  const MatrixXd eye = MatrixXd::Identity(d, d);
  const MatrixDataset predictors =
      sample_matrix_normal(n, MatrixXd::Zero(d, d), eye, eye, mix_seed(seed, 1));
  SyntheticInstance out =
      assemble(predictors, draw_noise(n, noise_sd, mix_seed(seed, 2)),
               [model_id](const MatrixXd& x) { return model_response(model_id, x); });
  out.true_row_basis = unit_columns(d, model_id == 3 ? 2 : 1);
  out.true_col_basis = unit_columns(d, 2);
  out.model_id = model_id;
  out.seed = seed;
  out.noise_sd = noise_sd;
  return out;
}

SyntheticInstance gen_rank1_linear(Index n, const VectorXd& u0, const VectorXd& v0,
                                   double noise_sd, std::uint64_t seed) {
  require(u0.norm() > 0.0 && v0.norm() > 0.0, "true directions must be non-zero");
  require(n >= 1, "n must be at least 1");
  const VectorXd u = u0.normalized();
  const VectorXd v = v0.normalized();
  const MatrixDataset predictors =
      sample_matrix_normal(n, MatrixXd::Zero(u.size(), v.size()), MatrixXd::Identity(u.size(), u.size()),
                           MatrixXd::Identity(v.size(), v.size()), mix_seed(seed, 1));
  SyntheticInstance out = assemble(predictors, draw_noise(n, noise_sd, mix_seed(seed, 2)),
                                   [&](const MatrixXd& x) { return u.dot(x * v); });
  out.true_row_basis = u;
  out.true_col_basis = v;
  out.seed = seed;
  out.noise_sd = noise_sd;
  return out;
}

SyntheticTensorInstance gen_tensor_rank1(Index n, const std::vector<VectorXd>& u, double noise_sd,
                                         std::uint64_t seed) {
  require(u.size() >= 2, "tensor model needs at least two modes");
  require(n >= 1, "n must be at least 1");
  std::vector<Index> dims;
  std::vector<VectorXd> dirs;
  for (const auto& v : u) {
    require(v.norm() > 0.0, "true directions must be non-zero");
    dims.push_back(v.size());
    dirs.push_back(v.normalized());
  }
  Rng rng(mix_seed(seed, 1));
  const Index size = product(dims);
  std::vector<Tensor> samples;
  VectorXd noise = draw_noise(n, noise_sd, mix_seed(seed, 2));
  VectorXd y(n);
  for (Index i = 0; i < n; ++i) {
    Tensor x(dims, standard_normal_vector(size, rng));
    y[i] = contract_all(x, dirs) + noise[i];
    samples.push_back(std::move(x));
  }
  SyntheticTensorInstance out{TensorDataset(std::move(samples), y), {}, std::move(noise)};
  for (const auto& v : dirs) out.true_bases.push_back(v);
  return out;
}

namespace {

MatrixXd kron(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

void check_pairs(const MatrixXd& row_a, const MatrixXd& col_a, const MatrixXd& row_b,
                 const MatrixXd& col_b) {
  require(row_a.rows() == row_b.rows() && col_a.rows() == col_b.rows(),
          "subspace distance needs bases of the same ambient dimensions",
          ErrorKind::DimensionMismatch);
}

}  // namespace

double subspace_distance_explicit(const MatrixXd& row_a, const MatrixXd& col_a,
                                  const MatrixXd& row_b, const MatrixXd& col_b) {
  check_pairs(row_a, col_a, row_b, col_b);
  const MatrixXd a = kron(orthonormalize(col_a), orthonormalize(row_a));
  const MatrixXd b = kron(orthonormalize(col_b), orthonormalize(row_b));
  return (a * a.transpose() - b * b.transpose()).norm();
}

double subspace_distance_gram(const MatrixXd& row_a, const MatrixXd& col_a, const MatrixXd& row_b,
                              const MatrixXd& col_b) {
  check_pairs(row_a, col_a, row_b, col_b);
  const MatrixXd ra = orthonormalize(row_a);
  const MatrixXd ca = orthonormalize(col_a);
  const MatrixXd rb = orthonormalize(row_b);
  const MatrixXd cb = orthonormalize(col_b);
  const double qa = static_cast<double>(ra.cols() * ca.cols());
  const double qb = static_cast<double>(rb.cols() * cb.cols());
  const double cross = (ra.transpose() * rb).squaredNorm() * (ca.transpose() * cb).squaredNorm();
  return std::sqrt(std::max(0.0, qa + qb - 2.0 * cross));
}

double subspace_distance(const MatrixXd& row_a, const MatrixXd& col_a, const MatrixXd& row_b,
                         const MatrixXd& col_b) {
  if (row_a.rows() * col_a.rows() <= 1024)
    return subspace_distance_explicit(row_a, col_a, row_b, col_b);
  return subspace_distance_gram(row_a, col_a, row_b, col_b);
}

double projector_distance(const MatrixXd& a, const MatrixXd& b) {
  require(a.rows() == b.rows(), "projector distance needs a common ambient dimension",
          ErrorKind::DimensionMismatch);
  const MatrixXd qa = orthonormalize(a);
  const MatrixXd qb = orthonormalize(b);
  const double cross = (qa.transpose() * qb).squaredNorm();
  return std::sqrt(std::max(0.0, static_cast<double>(qa.cols() + qb.cols()) - 2.0 * cross));
}

std::string to_string(Method m) { return m == Method::Psmm ? "psmm" : "psvm"; }

Method parse_method(const std::string& name) {
  if (name == "psmm") return Method::Psmm;
  if (name == "psvm") return Method::Psvm;
  fail(ErrorKind::InvalidArgument, "unknown method '" + name + "' (expected psmm or psvm)");
}

namespace {

struct Cell {
  int model_id;
  Index d;
  Index n;
  int replicate;
};

std::uint64_t replicate_seed(std::uint64_t master, const Cell& c) {
  std::uint64_t s = mix_seed(master, static_cast<std::uint64_t>(c.model_id));
  s = mix_seed(s, static_cast<std::uint64_t>(c.d));
  s = mix_seed(s, static_cast<std::uint64_t>(c.n));
  return mix_seed(s, static_cast<std::uint64_t>(c.replicate));
}

BenchmarkRow run_method(const SyntheticInstance& inst, Method method, const Cell& cell,
                        PsmmConfig config, const BenchmarkSpec& spec) {
  BenchmarkRow row;
  row.model_id = cell.model_id;
  row.method = method;
  row.n = cell.n;
  row.d = cell.d;
  row.replicate = cell.replicate;
  config.seed = inst.seed;
  const int true_r1 = static_cast<int>(inst.true_row_basis.cols());
  const int true_r2 = static_cast<int>(inst.true_col_basis.cols());
  if (spec.true_dims) {
    config.r1 = true_r1;
    config.r2 = true_r2;
    config.vector_rank = true_r1 * true_r2;
  }
  const auto start = std::chrono::steady_clock::now();
  try {
    if (method == Method::Psmm) {
      const SubspaceEstimate est = fit_psmm(inst.dataset, config);
      row.distance =
          subspace_distance(inst.true_row_basis, inst.true_col_basis, est.row_basis, est.col_basis);
      row.r1 = est.r1;
      row.r2 = est.r2;
    } else {
      const SubspaceEstimate est = fit_psvm_baseline(inst.dataset, config);
      const MatrixXd truth = kron(inst.true_col_basis, inst.true_row_basis);
      row.distance = projector_distance(truth, est.row_basis);
      row.r1 = est.r1;
      row.r2 = est.r2;
    }
  } catch (const Error& e) {
    row.distance = std::numeric_limits<double>::quiet_NaN();
    row.status = "error:" + std::string(to_string(e.kind()));
  } catch (const std::exception&) {
    row.distance = std::numeric_limits<double>::quiet_NaN();
    row.status = "error";
  }
  const auto stop = std::chrono::steady_clock::now();
  if (spec.record_runtime) row.runtime_seconds = std::chrono::duration<double>(stop - start).count();
  return row;
}

}  // namespace

BenchmarkResult run_benchmark(const BenchmarkSpec& spec, const PsmmConfig& config,
                              std::uint64_t seed) {
  require(!spec.models.empty() && !spec.methods.empty() && !spec.n_grid.empty() &&
              !spec.d_grid.empty(),
          "benchmark grids must be non-empty");
  require(spec.replicates >= 1, "replicates must be at least 1");
  require(spec.jobs >= 1, "jobs must be at least 1");
  config.validate();
  for (int m : spec.models) require(m >= 1 && m <= 3, "model id must be 1, 2 or 3");
  for (Index d : spec.d_grid) require(d >= 2, "benchmark models need d >= 2");
  for (Index n : spec.n_grid) require(n >= 1, "n must be at least 1");

  // One task per (model, d, n, replicate); every method shares its instance.
  std::vector<Cell> cells;
  for (int m : spec.models)
    for (Index d : spec.d_grid)
      for (Index n : spec.n_grid)
        for (int r = 0; r < spec.replicates; ++r) cells.push_back({m, d, n, r});

  const std::size_t n_methods = spec.methods.size();
  std::vector<std::vector<BenchmarkRow>> by_cell(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const Cell& c = cells[i];
      const SyntheticInstance inst =
          gen_model(c.model_id, c.n, c.d, spec.noise_sd, replicate_seed(seed, c));
      for (Method method : spec.methods) by_cell[i].push_back(run_method(inst, method, c, config, spec));
    }
  };
  const auto threads = static_cast<std::size_t>(spec.jobs);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(threads, cells.size()); ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Canonical order: model, method, d, n, replicate.
  BenchmarkResult result;
  result.rows.reserve(cells.size() * n_methods);
  std::size_t per_model = spec.d_grid.size() * spec.n_grid.size() * static_cast<std::size_t>(spec.replicates);
  for (std::size_t mi = 0; mi < spec.models.size(); ++mi)
    for (std::size_t k = 0; k < n_methods; ++k)
      for (std::size_t j = 0; j < per_model; ++j)
        result.rows.push_back(by_cell[mi * per_model + j][k]);
  return result;
}

}  // namespace psmm
