#include "psmm/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "psmm/error.hpp"
#include "psmm/linalg.hpp"
#include "psmm/seed.hpp"

namespace psmm {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void PsmmConfig::validate() const {
  require(slices >= 2, "slice count H must satisfy H >= 2 (got " + std::to_string(slices) + ")");
  require(lambda > 0.0, "lambda must be positive");
  require(smm_tol > 0.0, "SMM tolerance must be positive");
  require(smm_max_iter >= 1, "SMM max_iter must be at least 1");
  require(restarts >= 0, "restarts must be non-negative");
  require(qp_tol > 0.0, "QP tolerance must be positive");
  require(!r1 || *r1 >= 1, "r1 must be at least 1");
  require(!r2 || *r2 >= 1, "r2 must be at least 1");
  require(!vector_rank || *vector_rank >= 1, "vector rank must be at least 1");
  for (const auto& r : mode_ranks) require(!r || *r >= 1, "mode ranks must be at least 1");
}

void PsmmConfig::validate_dims(Index d1, Index d2) const {
  // A singleton side only admits rank 1.
  require(!r1 || *r1 < d1 || (d1 == 1 && *r1 == 1),
          "r1 must satisfy 1 <= r1 < d1 = " + std::to_string(d1));
  require(!r2 || *r2 < d2 || (d2 == 1 && *r2 == 1),
          "r2 must satisfy 1 <= r2 < d2 = " + std::to_string(d2));
  if (symmetric) require(d1 == d2, "symmetric mode needs square predictors");
}

SmmOptions PsmmConfig::smm_options(std::uint64_t slice_seed) const {
  SmmOptions o;
  o.lambda = lambda;
  o.tol = smm_tol;
  o.max_iter = smm_max_iter;
  o.restarts = restarts;
  o.seed = slice_seed;
  o.qp_tol = qp_tol;
  return o;
}

SliceLabelSet slice_labels(const VectorXd& responses, int slices) {
  require(slices >= 2, "slice count H must satisfy H >= 2");
  const Index n = responses.size();
  require(n >= 4, "slicing needs at least 4 responses");
  std::vector<double> sorted(responses.data(), responses.data() + n);
  std::sort(sorted.begin(), sorted.end());

  SliceLabelSet out;
  for (int h = 1; h <= slices; ++h) {
    const Index rank = (n * h + slices - 1) / slices;  // ceil(n h / H), 1-based
    const double q = sorted[static_cast<std::size_t>(rank - 1)];
    out.cutpoints.push_back(q);
    VectorXd labels(n);
    Index pos = 0;
    for (Index i = 0; i < n; ++i) {
      labels[i] = responses[i] > q ? 1.0 : -1.0;
      pos += responses[i] > q ? 1 : 0;
    }
    if (pos >= 2 && n - pos >= 2) {
      out.retained.push_back(h);
      out.labels.push_back(std::move(labels));
    }
  }
  if (out.retained.empty())
    fail(ErrorKind::TooFewSlices, "no slice has at least two samples in each class");
  return out;
}

CandidateAggregate aggregate_directions(const std::vector<DirectionTriple>& triples) {
  require(!triples.empty(), "aggregation needs at least one direction triple");
  const Index d1 = triples.front().u.size();
  const Index d2 = triples.front().v.size();
  CandidateAggregate out;
  out.u_hat = MatrixXd::Zero(d1, d1);
  out.v_hat = MatrixXd::Zero(d2, d2);
  for (const auto& tr : triples) {
    require(tr.u.size() == d1 && tr.v.size() == d2, "direction triples have mixed dimensions",
            ErrorKind::DimensionMismatch);
    out.u_hat.noalias() += tr.u * tr.u.transpose();
    out.v_hat.noalias() += tr.v * tr.v.transpose();
  }
  out.row = sorted_eigen(out.u_hat);
  out.col = sorted_eigen(out.v_hat);
  return out;
}

int select_dimension_bic(const VectorXd& eigenvalues, Index n) {
  require(eigenvalues.size() >= 1, "BIC needs at least one eigenvalue");
  require(n >= 1, "BIC needs n >= 1");
  const double unit = eigenvalues[0] / std::sqrt(static_cast<double>(n));
  double cumulative = 0.0;
  double best = -std::numeric_limits<double>::infinity();
  int best_r = 1;
  for (Index r = 1; r <= eigenvalues.size(); ++r) {
    cumulative += eigenvalues[r - 1];
    const double bic = cumulative - unit * static_cast<double>(r);
    if (bic > best) {
      best = bic;
      best_r = static_cast<int>(r);
    }
  }
  return best_r;
}

namespace {

MatrixXd leading_columns(const SortedEigen& eig, int r) {
  MatrixXd basis = eig.vectors.leftCols(r);
  canonicalize_signs(basis);
  return basis;
}

VectorXd clamp_nonnegative(const VectorXd& v) { return v.cwiseMax(0.0); }

int choose_rank(const std::optional<int>& fixed, const VectorXd& eigenvalues, Index n) {
  return fixed ? *fixed : select_dimension_bic(eigenvalues, n);
}

MatrixXd vectorize(const MatrixXd& x) { return Eigen::Map<const VectorXd>(x.data(), x.size()); }

}  // namespace

SubspaceEstimate fit_psmm(const MatrixDataset& data, const PsmmConfig& config) {
  config.validate();
  config.validate_dims(data.rows(), data.cols());
  const VectorXd& y = data.responses();

  const MatNormParams params = flipflop_fit(data, config.flipflop);
  const SliceLabelSet slices = slice_labels(y, config.slices);
  auto ctx = std::make_shared<const SmmContext>(data, params);

  SubspaceEstimate out;
  out.config = config;
  std::vector<DirectionTriple> triples;
  for (std::size_t s = 0; s < slices.retained.size(); ++s) {
    const int h = slices.retained[s];
    Rank1Smm smm(ctx, slices.labels[s], config.lambda, config.qp_tol);
    triples.push_back(smm.fit(config.smm_options(mix_seed(config.seed, static_cast<std::uint64_t>(h)))));
    const auto& tr = triples.back();
    out.convergence.push_back({h, tr.objective, tr.iterations, tr.converged});
  }

  const CandidateAggregate agg = aggregate_directions(triples);
  const Index n = data.n();
  if (config.symmetric) {
    const SortedEigen joint = sorted_eigen(agg.u_hat + agg.v_hat);
    const int r = choose_rank(config.r1 ? config.r1 : config.r2, joint.values, n);
    out.row_basis = leading_columns(joint, r);
    out.col_basis = out.row_basis;
    out.eigvals_row = clamp_nonnegative(joint.values);
    out.eigvals_col = out.eigvals_row;
    out.r1 = out.r2 = r;
    out.symmetric = true;
  } else {
    out.r1 = choose_rank(config.r1, agg.row.values, n);
    out.r2 = choose_rank(config.r2, agg.col.values, n);
    out.row_basis = leading_columns(agg.row, out.r1);
    out.col_basis = leading_columns(agg.col, out.r2);
    out.eigvals_row = clamp_nonnegative(agg.row.values);
    out.eigvals_col = clamp_nonnegative(agg.col.values);
  }
  return out;
}

TensorSubspaceEstimate fit_pstm(const TensorDataset& data, const PsmmConfig& config) {
  config.validate();
  const auto& dims = data.dims();
  const auto order = dims.size();
  auto fixed_rank = [&](std::size_t k) -> std::optional<int> {
    if (k < config.mode_ranks.size() && config.mode_ranks[k]) return config.mode_ranks[k];
    if (k == 0) return config.r1;
    if (k == 1) return config.r2;
    return std::nullopt;
  };
  for (std::size_t k = 0; k < order; ++k) {
    const auto r = fixed_rank(k);
    if (r && dims[k] > 1)
      require(*r < dims[k], "rank for mode " + std::to_string(k + 1) + " must be below d_k");
  }
  const VectorXd& y = data.responses();

  const TensorNormParams params = flipflop_fit_tensor(data, config.flipflop);
  const SliceLabelSet slices = slice_labels(y, config.slices);
  auto ctx = std::make_shared<const TensorSmmContext>(data, params);

  TensorSubspaceEstimate out;
  out.config = config;
  std::vector<MatrixXd> aggregates;
  for (Index d : dims) aggregates.push_back(MatrixXd::Zero(d, d));
  for (std::size_t s = 0; s < slices.retained.size(); ++s) {
    const int h = slices.retained[s];
    Rank1Stm stm(ctx, slices.labels[s], config.lambda, config.qp_tol);
    const TensorDirectionSet fit =
        stm.fit(config.smm_options(mix_seed(config.seed, static_cast<std::uint64_t>(h))));
    for (std::size_t k = 0; k < order; ++k) aggregates[k].noalias() += fit.u[k] * fit.u[k].transpose();
    out.convergence.push_back({h, fit.objective, fit.iterations, fit.converged});
  }

  for (std::size_t k = 0; k < order; ++k) {
    const SortedEigen eig = sorted_eigen(aggregates[k]);
    const int r = dims[k] == 1 ? 1 : choose_rank(fixed_rank(k), eig.values, data.n());
    out.ranks.push_back(r);
    out.bases.push_back(leading_columns(eig, r));
    out.eigvals.push_back(clamp_nonnegative(eig.values));
  }
  return out;
}

SubspaceEstimate fit_psvm_baseline(const MatrixDataset& data, const PsmmConfig& config) {
  config.validate();
  const Index p = data.rows() * data.cols();
  const Index n = data.n();
  const VectorXd& y = data.responses();

  std::vector<MatrixXd> vectors;
  vectors.reserve(static_cast<std::size_t>(n));
  for (const auto& x : data.samples()) vectors.push_back(vectorize(x));
  const MatrixDataset vec_data(std::move(vectors), y);

  MatNormParams params;
  params.mean = sample_mean(vec_data);
  MatrixXd cov = MatrixXd::Zero(p, p);
  for (const auto& x : vec_data.samples()) {
    const VectorXd c = x - params.mean;
    cov.noalias() += c * c.transpose();
  }
  cov /= static_cast<double>(n);
  cov += (1e-6 * cov.trace() / static_cast<double>(p)) * MatrixXd::Identity(p, p);
  params.sigma_row = cov;
  params.sigma_col = MatrixXd::Ones(1, 1);

  const SliceLabelSet slices = slice_labels(y, config.slices);
  auto ctx = std::make_shared<const SmmContext>(vec_data, params);
  const VectorXd pinned = VectorXd::Ones(1);

  SubspaceEstimate out;
  out.config = config;
  MatrixXd aggregate = MatrixXd::Zero(p, p);
  for (std::size_t s = 0; s < slices.retained.size(); ++s) {
    check_labels(slices.labels[s], 2);
    Rank1Smm svm(ctx, slices.labels[s], config.lambda, config.qp_tol);
    const DirectionUpdate fit = svm.update_u(pinned);
    aggregate.noalias() += fit.direction * fit.direction.transpose();
    out.convergence.push_back({slices.retained[s], fit.objective, 1, fit.qp.converged});
  }

  const SortedEigen eig = sorted_eigen(aggregate);
  std::optional<int> fixed = config.vector_rank;
  if (!fixed && config.r1 && config.r2) fixed = *config.r1 * *config.r2;
  if (fixed) require(*fixed < p, "vector rank must be below d1 * d2");
  out.r1 = choose_rank(fixed, eig.values, n);
  out.r2 = 1;
  out.row_basis = leading_columns(eig, out.r1);
  out.col_basis = MatrixXd::Ones(1, 1);
  out.eigvals_row = clamp_nonnegative(eig.values);
  out.eigvals_col = VectorXd();
  return out;
}

ReducedFeatures reduce(const MatrixDataset& data, const SubspaceEstimate& estimate) {
  const Index d1 = data.rows();
  const Index d2 = data.cols();
  const bool vectorized = estimate.col_basis.rows() == 1 && estimate.row_basis.rows() == d1 * d2 &&
                          d2 > 1;
  require(vectorized || (estimate.row_basis.rows() == d1 && estimate.col_basis.rows() == d2),
          "estimate bases do not match the data dimensions", ErrorKind::DimensionMismatch);
  ReducedFeatures out;
  out.coordinates.reserve(static_cast<std::size_t>(data.n()));
  for (const auto& x : data.samples()) {
    if (vectorized)
      out.coordinates.push_back(estimate.row_basis.transpose() * vectorize(x));
    else
      out.coordinates.push_back(estimate.row_basis.transpose() * x * estimate.col_basis);
  }
  if (estimate.symmetric && estimate.r1 == 2 && estimate.row_basis.cols() == 2) {
    std::vector<std::array<double, 3>> triples;
    const VectorXd u1 = estimate.row_basis.col(0);
    const VectorXd u2 = estimate.row_basis.col(1);
    for (const auto& x : data.samples())
      triples.push_back({u1.dot(x * u1), u2.dot(x * u2), u1.dot(x * u2)});
    out.symmetric_triples = std::move(triples);
  }
  return out;
}

std::vector<Tensor> reduce(const TensorDataset& data, const TensorSubspaceEstimate& estimate) {
  require(estimate.bases.size() == static_cast<std::size_t>(data.order()),
          "estimate order does not match the data", ErrorKind::DimensionMismatch);
  for (std::size_t k = 0; k < estimate.bases.size(); ++k)
    require(estimate.bases[k].rows() == data.dims()[k], "mode basis has the wrong ambient size",
            ErrorKind::DimensionMismatch);
  std::vector<Tensor> out;
  for (const auto& x : data.samples()) {
    Tensor r = x;
    for (std::size_t k = 0; k < estimate.bases.size(); ++k)
      r = r.mode_product(static_cast<Index>(k), estimate.bases[k].transpose());
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace psmm
