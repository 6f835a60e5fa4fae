#include "psmm/smm.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "psmm/error.hpp"
#include "psmm/linalg.hpp"
#include "psmm/seed.hpp"

namespace psmm {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

Eigen::LLT<MatrixXd> factor_spd(const MatrixXd& m, const char* name) {
  Eigen::LLT<MatrixXd> llt(m);
  require(llt.info() == Eigen::Success, std::string(name) + " is not positive definite",
          ErrorKind::SingularCovariance);
  return llt;
}

double hinge_sum(const VectorXd& scores, const VectorXd& labels, double t) {
  return (1.0 - labels.array() * (scores.array() - t)).max(0.0).sum();
}

/// Minimize s * w' S w + (lambda/n) sum hinge(1 - y_i (w' f_i - t)) over
/// (w, t) for feature columns f_i, through the dual with kernel
/// f_i' S^{-1} f_j / s.
DirectionUpdate solve_block(const MatrixXd& features, const Eigen::LLT<MatrixXd>& llt, double scale,
                            const VectorXd& labels, double lambda, double qp_tol,
                            const SmoOptions& smo) {
  const Index n = features.cols();
  const MatrixXd h = llt.solve(features);  // S^{-1} F
  SvmDualProblem problem;
  problem.kernel.noalias() = features.transpose() * h;
  problem.kernel /= scale;
  problem.labels = labels;
  problem.box = lambda / static_cast<double>(n);
  problem.tol = qp_tol;
  DirectionUpdate out;
  out.qp = solve_svm_dual(problem, smo);
  out.direction = 0.5 * h * labels.cwiseProduct(out.qp.alphas) / scale;
  out.t = out.qp.bias_t;
  return out;
}

Eigen::VectorXd leading_eigenvector(const MatrixXd& m) {
  return sorted_eigen(m).vectors.col(0);
}

void canonical_sign(VectorXd& v) {
  Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v[arg] < 0.0) v = -v;
}

bool better(double candidate, double incumbent) { return candidate < incumbent; }

}  // namespace

void check_labels(const VectorXd& labels, Index min_per_class) {
  Index pos = 0, neg = 0;
  for (Index i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1.0) ++pos;
    else if (labels[i] == -1.0) ++neg;
    else fail(ErrorKind::InvalidArgument, "labels must be -1 or +1");
  }
  if (pos < min_per_class || neg < min_per_class) {
    fail(ErrorKind::InfeasibleLabels,
         "each class needs at least " + std::to_string(min_per_class) + " samples (got " +
             std::to_string(pos) + " positive, " + std::to_string(neg) + " negative)");
  }
}

void balance_norms(VectorXd& u, VectorXd& v) {
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) {
    u.setZero();
    v.setZero();
    return;
  }
  const double c = std::sqrt(nv / nu);
  u *= c;
  v /= c;
}

void balance_norms(std::vector<VectorXd>& directions) {
  double log_sum = 0.0;
  for (const auto& d : directions) {
    const double nd = d.norm();
    if (nd == 0.0) {
      for (auto& z : directions) z.setZero();
      return;
    }
    log_sum += std::log(nd);
  }
  const double target = std::exp(log_sum / static_cast<double>(directions.size()));
  for (auto& d : directions) d *= target / d.norm();
}

// ---------------------------------------------------------------------------

SmmContext::SmmContext(const MatrixDataset& data, const MatNormParams& params)
    : params_(params),
      row_llt_(factor_spd(params.sigma_row, "sigma_row")),
      col_llt_(factor_spd(params.sigma_col, "sigma_col")) {
  require(params.mean.rows() == data.rows() && params.mean.cols() == data.cols() &&
              params.sigma_row.rows() == data.rows() && params.sigma_col.rows() == data.cols(),
          "covariance parameters do not match the data shape", ErrorKind::DimensionMismatch);
  centered_.reserve(static_cast<std::size_t>(data.n()));
  for (const auto& x : data.samples()) centered_.push_back(x - params.mean);
}

Rank1Smm::Rank1Smm(std::shared_ptr<const SmmContext> context, VectorXd labels, double lambda,
                   double qp_tol)
    : context_(std::move(context)), labels_(std::move(labels)), lambda_(lambda), qp_tol_(qp_tol) {
  require(lambda_ > 0.0, "lambda must be positive");
  require(labels_.size() == context_->n(), "label vector length differs from n",
          ErrorKind::DimensionMismatch);
  check_labels(labels_, 0);
}

double Rank1Smm::objective(const VectorXd& u, const VectorXd& v, double t) const {
  const auto& p = context_->params();
  require(u.size() == context_->rows() && v.size() == context_->cols(),
          "direction lengths do not match the data", ErrorKind::DimensionMismatch);
  const Index n = context_->n();
  VectorXd scores(n);
  for (Index i = 0; i < n; ++i)
    scores[i] = u.dot(context_->centered()[static_cast<std::size_t>(i)] * v);
  const double penalty = u.dot(p.sigma_row * u) * v.dot(p.sigma_col * v);
  return penalty + (lambda_ / static_cast<double>(n)) * hinge_sum(scores, labels_, t);
}

DirectionUpdate Rank1Smm::update_u(const VectorXd& v, const SmoOptions& smo) const {
  require(v.size() == context_->cols(), "v has the wrong length", ErrorKind::DimensionMismatch);
  const double s = v.dot(context_->params().sigma_col * v);
  if (!(s > 0.0)) fail(ErrorKind::DegenerateDirection, "update_u: v' S_c v must be positive");
  const Index n = context_->n();
  MatrixXd features(context_->rows(), n);
  for (Index i = 0; i < n; ++i) features.col(i) = context_->centered()[static_cast<std::size_t>(i)] * v;
  DirectionUpdate out = solve_block(features, context_->row_llt(), s, labels_, lambda_, qp_tol_, smo);
  out.objective = objective(out.direction, v, out.t);
  return out;
}

DirectionUpdate Rank1Smm::update_v(const VectorXd& u, const SmoOptions& smo) const {
  require(u.size() == context_->rows(), "u has the wrong length", ErrorKind::DimensionMismatch);
  const double s = u.dot(context_->params().sigma_row * u);
  if (!(s > 0.0)) fail(ErrorKind::DegenerateDirection, "update_v: u' S_r u must be positive");
  const Index n = context_->n();
  MatrixXd features(context_->cols(), n);
  for (Index i = 0; i < n; ++i)
    features.col(i) = context_->centered()[static_cast<std::size_t>(i)].transpose() * u;
  DirectionUpdate out = solve_block(features, context_->col_llt(), s, labels_, lambda_, qp_tol_, smo);
  out.objective = objective(u, out.direction, out.t);
  return out;
}

std::pair<VectorXd, VectorXd> Rank1Smm::init_directions() const {
  const auto& p = context_->params();
  const Index n = context_->n();
  MatrixXd delta = MatrixXd::Zero(context_->rows(), context_->cols());
  double scale = 0.0;
  for (Index i = 0; i < n; ++i) {
    const auto& x = context_->centered()[static_cast<std::size_t>(i)];
    delta += labels_[i] * x;
    scale += x.norm();
  }
  delta /= static_cast<double>(n);
  scale /= static_cast<double>(n);

  const MatrixXd row_is = sym_inv_sqrt(p.sigma_row);
  const MatrixXd col_is = sym_inv_sqrt(p.sigma_col);
  const MatrixXd white = row_is * delta * col_is;
  VectorXd u0, v0;
  if (white.norm() <= 1e-12 * std::max(scale, std::numeric_limits<double>::min())) {
    u0 = leading_eigenvector(p.sigma_row);
    v0 = leading_eigenvector(p.sigma_col);
  } else {
    Eigen::JacobiSVD<MatrixXd> svd(white, Eigen::ComputeThinU | Eigen::ComputeThinV);
    u0 = (row_is * svd.matrixU().col(0)).normalized();
    v0 = (col_is * svd.matrixV().col(0)).normalized();
  }
  canonical_sign(u0);
  canonical_sign(v0);
  return {u0, v0};
}

DirectionTriple Rank1Smm::descend(const VectorXd& u0, const VectorXd& v0,
                                  const SmmOptions& options) const {
  DirectionTriple out;
  out.u = u0;
  out.v = v0;
  SmoOptions smo_u, smo_v;
  double prev = std::numeric_limits<double>::infinity();
  for (int iter = 1; iter <= options.max_iter; ++iter) {
    out.iterations = iter;
    DirectionUpdate up = update_u(out.v, smo_u);
    out.u = up.direction;
    out.t = up.t;
    out.objective = up.objective;
    out.objective_trace.push_back(up.objective);
    smo_u.initial_alphas = up.qp.alphas;
    if (out.u.squaredNorm() == 0.0) {
      // u = 0 is stationary for every v.
      out.converged = true;
      break;
    }

    DirectionUpdate vp = update_v(out.u, smo_v);
    out.v = vp.direction;
    out.t = vp.t;
    out.objective = vp.objective;
    out.objective_trace.push_back(vp.objective);
    smo_v.initial_alphas = vp.qp.alphas;
    if (out.v.squaredNorm() == 0.0) {
      out.converged = true;
      break;
    }

    const double decrease = (prev - out.objective) / std::max(std::abs(prev), 1e-300);
    if (std::isfinite(prev) && decrease < options.tol) {
      out.converged = true;
      break;
    }
    prev = out.objective;
  }
  balance_norms(out.u, out.v);
  out.objective = objective(out.u, out.v, out.t);
  return out;
}

DirectionTriple Rank1Smm::fit(const SmmOptions& options) const {
  require(options.restarts >= 0, "restarts must be non-negative");
  require(options.max_iter >= 1, "max_iter must be at least 1");
  check_labels(labels_, 2);
  auto [u0, v0] = init_directions();
  DirectionTriple best = descend(u0, v0, options);
  for (int r = 0; r < options.restarts; ++r) {
    Rng rng(mix_seed(options.seed, static_cast<std::uint64_t>(r)));
    VectorXd ur = random_unit_vector(context_->rows(), rng);
    VectorXd vr = random_unit_vector(context_->cols(), rng);
    DirectionTriple cand = descend(ur, vr, options);
    if (better(cand.objective, best.objective)) best = std::move(cand);
  }
  return best;
}

double objective_eval(const VectorXd& u, const VectorXd& v, double t, const MatrixDataset& data,
                      const VectorXd& labels, const MatNormParams& params, double lambda) {
  auto ctx = std::make_shared<const SmmContext>(data, params);
  return Rank1Smm(ctx, labels, lambda).objective(u, v, t);
}

DirectionUpdate update_u(const MatrixDataset& data, const VectorXd& labels, const VectorXd& v,
                         const MatNormParams& params, double lambda) {
  auto ctx = std::make_shared<const SmmContext>(data, params);
  return Rank1Smm(ctx, labels, lambda).update_u(v);
}

DirectionUpdate update_v(const MatrixDataset& data, const VectorXd& labels, const VectorXd& u,
                         const MatNormParams& params, double lambda) {
  auto ctx = std::make_shared<const SmmContext>(data, params);
  return Rank1Smm(ctx, labels, lambda).update_v(u);
}

std::pair<VectorXd, VectorXd> init_directions(const MatrixDataset& data, const VectorXd& labels,
                                              const MatNormParams& params) {
  auto ctx = std::make_shared<const SmmContext>(data, params);
  return Rank1Smm(ctx, labels, 1.0).init_directions();
}

DirectionTriple fit_rank1_smm(const MatrixDataset& data, const VectorXd& labels,
                              const MatNormParams& params, const SmmOptions& options) {
  auto ctx = std::make_shared<const SmmContext>(data, params);
  return Rank1Smm(ctx, labels, options.lambda, options.qp_tol).fit(options);
}

// ---------------------------------------------------------------------------

TensorSmmContext::TensorSmmContext(const TensorDataset& data, const TensorNormParams& params)
    : params_(params) {
  require(params.mean.dims() == data.dims() &&
              params.sigmas.size() == static_cast<std::size_t>(data.order()),
          "covariance parameters do not match the data shape", ErrorKind::DimensionMismatch);
  for (std::size_t k = 0; k < params.sigmas.size(); ++k) {
    require(params.sigmas[k].rows() == data.dims()[k], "sigma_k has the wrong size",
            ErrorKind::DimensionMismatch);
    llts_.push_back(factor_spd(params.sigmas[k], "sigma_k"));
  }
  for (const auto& x : data.samples()) {
    centered_.push_back(x);
    centered_.back() -= params.mean;
  }
}

Rank1Stm::Rank1Stm(std::shared_ptr<const TensorSmmContext> context, VectorXd labels, double lambda,
                   double qp_tol)
    : context_(std::move(context)), labels_(std::move(labels)), lambda_(lambda), qp_tol_(qp_tol) {
  require(lambda_ > 0.0, "lambda must be positive");
  require(labels_.size() == context_->n(), "label vector length differs from n",
          ErrorKind::DimensionMismatch);
  check_labels(labels_, 0);
}

double Rank1Stm::objective(const std::vector<VectorXd>& u, double t) const {
  const auto& p = context_->params();
  require(static_cast<Index>(u.size()) == context_->order(), "need one direction per mode",
          ErrorKind::DimensionMismatch);
  double penalty = 1.0;
  for (std::size_t k = 0; k < u.size(); ++k) penalty *= u[k].dot(p.sigmas[k] * u[k]);
  const Index n = context_->n();
  VectorXd scores(n);
  for (Index i = 0; i < n; ++i) scores[i] = contract_all(context_->centered()[static_cast<std::size_t>(i)], u);
  return penalty + (lambda_ / static_cast<double>(n)) * hinge_sum(scores, labels_, t);
}

DirectionUpdate Rank1Stm::update_mode(Index mode, const std::vector<VectorXd>& u,
                                      const SmoOptions& smo) const {
  const auto& p = context_->params();
  require(mode >= 0 && mode < context_->order(), "mode out of range");
  double s = 1.0;
  for (std::size_t j = 0; j < u.size(); ++j)
    if (static_cast<Index>(j) != mode) s *= u[j].dot(p.sigmas[j] * u[j]);
  if (!(s > 0.0))
    fail(ErrorKind::DegenerateDirection, "update_mode: a fixed direction has zero norm");
  const Index n = context_->n();
  MatrixXd features(context_->dims()[static_cast<std::size_t>(mode)], n);
  for (Index i = 0; i < n; ++i)
    features.col(i) = mode_k_contract(context_->centered()[static_cast<std::size_t>(i)], u, mode);
  DirectionUpdate out = solve_block(features, context_->llt(mode), s, labels_, lambda_, qp_tol_, smo);
  std::vector<VectorXd> next = u;
  next[static_cast<std::size_t>(mode)] = out.direction;
  out.objective = objective(next, out.t);
  return out;
}

std::vector<VectorXd> Rank1Stm::init_directions() const {
  const auto& p = context_->params();
  const Index n = context_->n();
  Tensor delta(context_->dims());
  double scale = 0.0;
  for (Index i = 0; i < n; ++i) {
    Tensor x = context_->centered()[static_cast<std::size_t>(i)];
    scale += x.values().norm();
    x *= labels_[i];
    delta += x;
  }
  delta *= 1.0 / static_cast<double>(n);
  scale /= static_cast<double>(n);

  std::vector<MatrixXd> inv_sqrt;
  Tensor white = delta;
  for (std::size_t k = 0; k < p.sigmas.size(); ++k) {
    inv_sqrt.push_back(sym_inv_sqrt(p.sigmas[k]));
    white = white.mode_product(static_cast<Index>(k), inv_sqrt.back());
  }
  const bool vanished =
      white.values().norm() <= 1e-12 * std::max(scale, std::numeric_limits<double>::min());
  std::vector<VectorXd> out;
  for (std::size_t k = 0; k < p.sigmas.size(); ++k) {
    VectorXd uk;
    if (vanished) {
      uk = leading_eigenvector(p.sigmas[k]);
    } else {
      Eigen::JacobiSVD<MatrixXd> svd(white.unfold(static_cast<Index>(k)), Eigen::ComputeThinU);
      uk = (inv_sqrt[k] * svd.matrixU().col(0)).normalized();
    }
    canonical_sign(uk);
    out.push_back(std::move(uk));
  }
  return out;
}

TensorDirectionSet Rank1Stm::descend(std::vector<VectorXd> start, const SmmOptions& options) const {
  TensorDirectionSet out;
  out.u = std::move(start);
  const auto order = static_cast<std::size_t>(context_->order());
  std::vector<SmoOptions> smo(order);
  double prev = std::numeric_limits<double>::infinity();
  bool degenerate = false;
  for (int iter = 1; iter <= options.max_iter && !degenerate; ++iter) {
    out.iterations = iter;
    for (std::size_t k = 0; k < order; ++k) {
      DirectionUpdate up = update_mode(static_cast<Index>(k), out.u, smo[k]);
      out.u[k] = up.direction;
      out.t = up.t;
      out.objective = up.objective;
      out.objective_trace.push_back(up.objective);
      smo[k].initial_alphas = up.qp.alphas;
      if (out.u[k].squaredNorm() == 0.0) {
        degenerate = true;
        break;
      }
    }
    if (degenerate) {
      out.converged = true;
      break;
    }
    const double decrease = (prev - out.objective) / std::max(std::abs(prev), 1e-300);
    if (std::isfinite(prev) && decrease < options.tol) {
      out.converged = true;
      break;
    }
    prev = out.objective;
  }
  balance_norms(out.u);
  out.objective = objective(out.u, out.t);
  return out;
}

TensorDirectionSet Rank1Stm::fit(const SmmOptions& options) const {
  require(options.restarts >= 0, "restarts must be non-negative");
  require(options.max_iter >= 1, "max_iter must be at least 1");
  check_labels(labels_, 2);
  TensorDirectionSet best = descend(init_directions(), options);
  for (int r = 0; r < options.restarts; ++r) {
    Rng rng(mix_seed(options.seed, static_cast<std::uint64_t>(r)));
    std::vector<VectorXd> start;
    for (Index d : context_->dims()) start.push_back(random_unit_vector(d, rng));
    TensorDirectionSet cand = descend(std::move(start), options);
    if (better(cand.objective, best.objective)) best = std::move(cand);
  }
  return best;
}

TensorDirectionSet fit_rank1_stm(const TensorDataset& data, const VectorXd& labels,
                                 const TensorNormParams& params, const SmmOptions& options) {
  auto ctx = std::make_shared<const TensorSmmContext>(data, params);
  return Rank1Stm(ctx, labels, options.lambda, options.qp_tol).fit(options);
}

}  // namespace psmm
