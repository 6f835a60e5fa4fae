#include "psmm/matnorm.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "psmm/error.hpp"
#include "psmm/linalg.hpp"

namespace psmm {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

/// Inverse of (M + ridge * tr(M)/d * I). An iterate whose smallest
/// eigenvalue does not clear the ridge floor (up to rounding) is singular.
MatrixXd regularized_inverse(const MatrixXd& m, double ridge, const char* name) {
  const Index d = m.rows();
  const double floor = ridge * m.trace() / static_cast<double>(d);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  const double lmin = es.eigenvalues()[0];
  const double lmax = es.eigenvalues()[d - 1];
  const double eps = std::numeric_limits<double>::epsilon();
  if (!(lmax > 0.0) || !std::isfinite(lmax) ||
      lmin <= std::max(1e-3 * floor, 64.0 * eps * lmax)) {
    fail(ErrorKind::SingularCovariance,
         std::string("flip-flop iterate for ") + name + " is singular (smallest eigenvalue " +
             std::to_string(lmin) + ")");
  }
  const VectorXd shifted = es.eigenvalues().array() + floor;
  const MatrixXd& q = es.eigenvectors();
  return q * shifted.cwiseInverse().asDiagonal() * q.transpose();
}

void symmetrize(MatrixXd& m) { m = 0.5 * (m + m.transpose()).eval(); }

double log_det_spd(const Eigen::LLT<MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

void check_factor(const MatrixXd& m, Index d, const char* name) {
  require(m.rows() == d && m.cols() == d,
          std::string(name) + " must be " + std::to_string(d) + "x" + std::to_string(d),
          ErrorKind::DimensionMismatch);
  require(is_symmetric(m, 1e-12), std::string(name) + " is not symmetric");
}

/// Scale so every factor after the first has unit Frobenius norm; the
/// Kronecker product is preserved.
std::vector<MatrixXd> normalized(std::span<const MatrixXd> factors) {
  std::vector<MatrixXd> out(factors.begin(), factors.end());
  for (std::size_t k = 1; k < out.size(); ++k) {
    const double s = out[k].norm();
    if (s > 0.0) {
      out[k] /= s;
      out[0] *= s;
    }
  }
  return out;
}

double kron_relative_change_multi(std::span<const MatrixXd> next, std::span<const MatrixXd> prev) {
  const auto nn = normalized(next);
  const auto oo = normalized(prev);
  const std::size_t k_count = nn.size();
  // next - prev = sum_m  N_1..N_{m-1} (x) (N_m - O_m) (x) O_{m+1}..O_K
  auto factor = [&](std::size_t term, std::size_t j) -> MatrixXd {
    if (j < term) return nn[j];
    if (j == term) return nn[j] - oo[j];
    return oo[j];
  };
  double sq = 0.0;
  for (std::size_t a = 0; a < k_count; ++a) {
    for (std::size_t b = 0; b < k_count; ++b) {
      double p = 1.0;
      for (std::size_t j = 0; j < k_count; ++j) p *= factor(a, j).cwiseProduct(factor(b, j)).sum();
      sq += p;
    }
  }
  double denom = 1.0;
  for (const auto& o : oo) denom *= o.norm();
  return std::sqrt(std::max(sq, 0.0)) / denom;
}

}  // namespace

MatrixXd sample_mean(const MatrixDataset& data) {
  MatrixXd mean = MatrixXd::Zero(data.rows(), data.cols());
  for (const auto& x : data.samples()) mean += x;
  return mean / static_cast<double>(data.n());
}

Tensor sample_mean(const TensorDataset& data) {
  Tensor mean(data.dims());
  for (const auto& x : data.samples()) mean += x;
  mean *= 1.0 / static_cast<double>(data.n());
  return mean;
}

bool flipflop_sample_size_ok(Index n, std::span<const Index> dims) {
  const double total = static_cast<double>(product(dims));
  double worst = 0.0;
  for (Index d : dims) {
    const double dk = static_cast<double>(d);
    worst = std::max(worst, dk / (total / dk));
  }
  return static_cast<double>(n) >= worst + 1.0;
}

double kron_relative_change(const MatrixXd& a, const MatrixXd& b, const MatrixXd& c,
                            const MatrixXd& d) {
  const MatrixXd next[] = {b, a};
  const MatrixXd prev[] = {d, c};
  return kron_relative_change_multi(next, prev);
}

double matnorm_loglik(const MatrixDataset& data, const MatrixXd& mean, const MatrixXd& sigma_row,
                      const MatrixXd& sigma_col) {
  const double n = static_cast<double>(data.n());
  const double d1 = static_cast<double>(data.rows());
  const double d2 = static_cast<double>(data.cols());
  Eigen::LLT<MatrixXd> row(sigma_row);
  Eigen::LLT<MatrixXd> col(sigma_col);
  if (row.info() != Eigen::Success || col.info() != Eigen::Success)
    return -std::numeric_limits<double>::infinity();
  double quad = 0.0;
  for (const auto& x : data.samples()) {
    MatrixXd a = row.matrixL().solve(x - mean);                            // L_r^{-1} X
    MatrixXd b = col.matrixL().solve(a.transpose());                       // L_c^{-1} (L_r^{-1} X)'
    quad += b.squaredNorm();
  }
  return -0.5 * (n * d1 * d2 * std::log(2.0 * std::numbers::pi) + n * d2 * log_det_spd(row) +
                 n * d1 * log_det_spd(col) + quad);
}

MatNormParams flipflop_fit(const MatrixDataset& data, const FlipFlopOptions& options) {
  require(options.tol > 0.0, "flip-flop tol must be positive");
  require(options.max_iter >= 1, "flip-flop max_iter must be at least 1");
  require(options.ridge >= 0.0, "flip-flop ridge must be non-negative");
  const Index n = data.n();
  const Index d1 = data.rows();
  const Index d2 = data.cols();
  const Index dims[] = {d1, d2};
  if (!flipflop_sample_size_ok(n, dims)) {
    fail(ErrorKind::SampleTooSmall,
         "flip-flop needs n >= max(d1/d2, d2/d1) + 1; got n = " + std::to_string(n) +
             " for d = (" + std::to_string(d1) + ", " + std::to_string(d2) + ")");
  }

  MatNormParams out;
  out.mean = sample_mean(data);
  std::vector<MatrixXd> centered;
  centered.reserve(static_cast<std::size_t>(n));
  for (const auto& x : data.samples()) centered.push_back(x - out.mean);

  MatrixXd sigma_col = MatrixXd::Identity(d2, d2);
  if (options.initial_sigma_col) {
    check_factor(*options.initial_sigma_col, d2, "initial sigma_col");
    sigma_col = *options.initial_sigma_col;
  }
  MatrixXd col_inv = regularized_inverse(sigma_col, options.ridge, "sigma_col");
  MatrixXd sigma_row(d1, d1);
  MatrixXd prev_row, prev_col;

  const double row_scale = 1.0 / (static_cast<double>(d2) * static_cast<double>(n));
  const double col_scale = 1.0 / (static_cast<double>(d1) * static_cast<double>(n));
  out.converged = false;
  for (int iter = 1; iter <= options.max_iter; ++iter) {
    sigma_row.setZero();
    for (const auto& x : centered) sigma_row.noalias() += x * col_inv * x.transpose();
    sigma_row *= row_scale;
    symmetrize(sigma_row);
    const MatrixXd row_inv = regularized_inverse(sigma_row, options.ridge, "sigma_row");
    out.loglik_trace.push_back(matnorm_loglik(data, out.mean, sigma_row, sigma_col));

    sigma_col.setZero();
    for (const auto& x : centered) sigma_col.noalias() += x.transpose() * row_inv * x;
    sigma_col *= col_scale;
    symmetrize(sigma_col);
    col_inv = regularized_inverse(sigma_col, options.ridge, "sigma_col");
    out.loglik_trace.push_back(matnorm_loglik(data, out.mean, sigma_row, sigma_col));

    if (options.rescale_every_sweep) {
      const double c = sigma_col.trace() / static_cast<double>(d2);
      sigma_col /= c;
      sigma_row *= c;
      col_inv *= c;
    }
    out.iterations = iter;
    if (iter > 1 && kron_relative_change(sigma_col, sigma_row, prev_col, prev_row) < options.tol) {
      out.converged = true;
      break;
    }
    prev_row = sigma_row;
    prev_col = sigma_col;
  }

  const double c = sigma_col.trace() / static_cast<double>(d2);
  out.sigma_col = sigma_col / c;
  out.sigma_row = sigma_row * c;
  return out;
}

double tensornorm_loglik(const TensorDataset& data, const Tensor& mean,
                         const std::vector<MatrixXd>& sigmas) {
  const double n = static_cast<double>(data.n());
  const double p = static_cast<double>(product(data.dims()));
  std::vector<MatrixXd> inverses;
  double logdet = 0.0;
  for (const auto& s : sigmas) {
    Eigen::LLT<MatrixXd> llt(s);
    if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
    logdet += (p / static_cast<double>(s.rows())) * log_det_spd(llt);
    inverses.push_back(llt.solve(MatrixXd::Identity(s.rows(), s.cols())));
  }
  double quad = 0.0;
  for (const auto& x : data.samples()) {
    Tensor c = x;
    c -= mean;
    Tensor w = c;
    for (std::size_t k = 0; k < inverses.size(); ++k)
      w = w.mode_product(static_cast<Index>(k), inverses[k]);
    quad += c.values().dot(w.values());
  }
  return -0.5 * (n * p * std::log(2.0 * std::numbers::pi) + n * logdet + quad);
}

TensorNormParams flipflop_fit_tensor(const TensorDataset& data, const FlipFlopOptions& options) {
  require(options.tol > 0.0, "flip-flop tol must be positive");
  require(options.max_iter >= 1, "flip-flop max_iter must be at least 1");
  require(options.ridge >= 0.0, "flip-flop ridge must be non-negative");
  const Index n = data.n();
  const auto& dims = data.dims();
  const auto order = static_cast<std::size_t>(data.order());
  if (!flipflop_sample_size_ok(n, dims)) {
    fail(ErrorKind::SampleTooSmall,
         "flip-flop needs n >= max_k d_k / prod_{j!=k} d_j + 1; got n = " + std::to_string(n));
  }
  const double total = static_cast<double>(product(dims));

  TensorNormParams out;
  out.mean = sample_mean(data);
  std::vector<Tensor> centered;
  centered.reserve(static_cast<std::size_t>(n));
  for (const auto& x : data.samples()) {
    centered.push_back(x);
    centered.back() -= out.mean;
  }

  out.sigmas.resize(order);
  std::vector<MatrixXd> inverses(order);
  for (std::size_t k = 0; k < order; ++k) {
    out.sigmas[k] = MatrixXd::Identity(dims[k], dims[k]);
  }
  if (options.initial_sigma_col && order == 2) {
    check_factor(*options.initial_sigma_col, dims[1], "initial sigma_col");
    out.sigmas[1] = *options.initial_sigma_col;
  }
  for (std::size_t k = 1; k < order; ++k)
    inverses[k] = regularized_inverse(out.sigmas[k], options.ridge, "sigma_k");

  std::vector<MatrixXd> prev;
  out.converged = false;
  for (int iter = 1; iter <= options.max_iter; ++iter) {
    for (std::size_t k = 0; k < order; ++k) {
      const auto mode = static_cast<Index>(k);
      MatrixXd s = MatrixXd::Zero(dims[k], dims[k]);
      for (const auto& x : centered) {
        Tensor w = x;
        for (std::size_t j = 0; j < order; ++j)
          if (j != k) w = w.mode_product(static_cast<Index>(j), inverses[j]);
        s.noalias() += x.unfold(mode) * w.unfold(mode).transpose();
      }
      s /= static_cast<double>(n) * (total / static_cast<double>(dims[k]));
      symmetrize(s);
      out.sigmas[k] = s;
      inverses[k] = regularized_inverse(s, options.ridge, "sigma_k");
      out.loglik_trace.push_back(tensornorm_loglik(data, out.mean, out.sigmas));
    }
    if (options.rescale_every_sweep) {
      for (std::size_t k = 1; k < order; ++k) {
        const double c = out.sigmas[k].trace() / static_cast<double>(dims[k]);
        out.sigmas[k] /= c;
        inverses[k] *= c;
        out.sigmas[0] *= c;
        inverses[0] /= c;
      }
    }
    out.iterations = iter;
    if (iter > 1 && kron_relative_change_multi(out.sigmas, prev) < options.tol) {
      out.converged = true;
      break;
    }
    prev = out.sigmas;
  }

  for (std::size_t k = 1; k < order; ++k) {
    const double c = out.sigmas[k].trace() / static_cast<double>(dims[k]);
    out.sigmas[k] /= c;
    out.sigmas[0] *= c;
  }
  return out;
}

WhitenedDataset whiten(const MatrixDataset& data, const MatNormParams& params) {
  require(params.mean.rows() == data.rows() && params.mean.cols() == data.cols() &&
              params.sigma_row.rows() == data.rows() && params.sigma_col.rows() == data.cols(),
          "whiten: parameter dimensions do not match the data", ErrorKind::DimensionMismatch);
  WhitenedDataset out;
  out.row_inv_sqrt = sym_inv_sqrt(params.sigma_row);
  out.col_inv_sqrt = sym_inv_sqrt(params.sigma_col);
  out.z.reserve(static_cast<std::size_t>(data.n()));
  for (const auto& x : data.samples())
    out.z.push_back(out.row_inv_sqrt * (x - params.mean) * out.col_inv_sqrt);
  out.params = params;
  return out;
}

WhitenedTensorDataset whiten(const TensorDataset& data, const TensorNormParams& params) {
  require(params.mean.dims() == data.dims() &&
              params.sigmas.size() == static_cast<std::size_t>(data.order()),
          "whiten: parameter dimensions do not match the data", ErrorKind::DimensionMismatch);
  WhitenedTensorDataset out;
  for (const auto& s : params.sigmas) out.inv_sqrt.push_back(sym_inv_sqrt(s));
  for (const auto& x : data.samples()) {
    Tensor z = x;
    z -= params.mean;
    for (std::size_t k = 0; k < out.inv_sqrt.size(); ++k)
      z = z.mode_product(static_cast<Index>(k), out.inv_sqrt[k]);
    out.z.push_back(std::move(z));
  }
  return out;
}

}  // namespace psmm
