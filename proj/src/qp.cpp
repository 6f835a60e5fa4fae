#include "psmm/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "psmm/error.hpp"
#include "psmm/linalg.hpp"

namespace psmm {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kTau = 1e-12;

bool in_up(double y, double a, double c) { return (y > 0 && a < c) || (y < 0 && a > 0); }
bool in_low(double y, double a, double c) { return (y > 0 && a > 0) || (y < 0 && a < c); }

void validate(const SvmDualProblem& p) {
  const Index n = p.labels.size();
  require(n >= 2, "SVM dual needs at least two samples");
  require(p.kernel.rows() == n && p.kernel.cols() == n, "kernel must be n x n",
          ErrorKind::DimensionMismatch);
  require(p.kernel.allFinite(), "kernel has non-finite entries");
  require(is_symmetric(p.kernel, 1e-10), "kernel is not symmetric");
  require(p.box > 0.0, "box constraint C must be positive");
  require(p.tol > 0.0, "KKT tolerance must be positive");
  Index pos = 0, neg = 0;
  for (Index i = 0; i < n; ++i) {
    if (p.labels[i] == 1.0) ++pos;
    else if (p.labels[i] == -1.0) ++neg;
    else fail(ErrorKind::InvalidArgument, "labels must be -1 or +1");
  }
  if (pos == 0 || neg == 0) fail(ErrorKind::InfeasibleLabels, "labels contain a single class");
}

/// Hessian of f(a) = -sum(a) + 1/2 a'Qa, i.e. Q = 1/2 (y y') .* K with K
/// symmetrized.
MatrixXd signed_hessian(const SvmDualProblem& p) {
  const Index n = p.labels.size();
  const MatrixXd& k = p.kernel;
  const VectorXd& y = p.labels;
  MatrixXd q(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) q(i, j) = 0.25 * y[i] * y[j] * (k(i, j) + k(j, i));
  return q;
}

/// Bias from f_i = y_i (Qa)_i, the fitted values 1/2 sum_j a_j y_j k_ij.
double bias_from_fitted(const VectorXd& y, const VectorXd& alphas, const VectorXd& f, double c) {
  double free_sum = 0.0;
  Index free_count = 0;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < y.size(); ++i) {
    const double r = f[i] - y[i];
    if (alphas[i] > 0.0 && alphas[i] < c) {
      free_sum += r;
      ++free_count;
    } else if ((y[i] < 0) == (alphas[i] <= 0.0)) {
      // y = -1 at zero or y = +1 at the box: t >= f_i - y_i.
      lower = std::max(lower, r);
    } else {
      upper = std::min(upper, r);
    }
  }
  if (free_count > 0) return free_sum / static_cast<double>(free_count);
  if (std::isinf(lower) && std::isinf(upper)) return 0.0;
  if (std::isinf(lower)) return upper;
  if (std::isinf(upper)) return lower;
  return 0.5 * (lower + upper);
}

double max_violation(const VectorXd& y, const VectorXd& a, const VectorXd& g, double c, Index* up,
                     Index* low) {
  double m = -std::numeric_limits<double>::infinity();
  double big_m = std::numeric_limits<double>::infinity();
  Index i_best = -1, j_best = -1;
  for (Index t = 0; t < y.size(); ++t) {
    const double v = -y[t] * g[t];
    if (in_up(y[t], a[t], c) && v > m) {
      m = v;
      i_best = t;
    }
    if (in_low(y[t], a[t], c) && v < big_m) {
      big_m = v;
      j_best = t;
    }
  }
  if (up) *up = i_best;
  if (low) *low = j_best;
  if (i_best < 0 || j_best < 0) return 0.0;
  return std::max(0.0, m - big_m);
}

}  // namespace

double svm_dual_objective(const SvmDualProblem& problem, const VectorXd& alphas) {
  const VectorXd ya = problem.labels.cwiseProduct(alphas);
  const MatrixXd k = 0.5 * (problem.kernel + problem.kernel.transpose());
  return -alphas.sum() + 0.25 * ya.dot(k * ya);
}

double svm_kkt_residual(const SvmDualProblem& problem, const VectorXd& alphas) {
  const MatrixXd q = signed_hessian(problem);
  const VectorXd g = q * alphas - VectorXd::Ones(alphas.size());
  return max_violation(problem.labels, alphas, g, problem.box, nullptr, nullptr);
}

double recover_bias(const SvmDualProblem& problem, const VectorXd& alphas) {
  const VectorXd& y = problem.labels;
  const MatrixXd k = 0.5 * (problem.kernel + problem.kernel.transpose());
  const VectorXd f = 0.5 * (k * y.cwiseProduct(alphas));
  return bias_from_fitted(y, alphas, f, problem.box);
}

SvmDualSolution solve_svm_dual(const SvmDualProblem& problem, const SmoOptions& options) {
  validate(problem);
  const Index n = problem.labels.size();
  const VectorXd& y = problem.labels;
  const double c = problem.box;
  const MatrixXd q = signed_hessian(problem);

  VectorXd a = VectorXd::Zero(n);
  if (options.initial_alphas) {
    require(options.initial_alphas->size() == n, "warm start has the wrong length",
            ErrorKind::DimensionMismatch);
    a = options.initial_alphas->cwiseMax(0.0).cwiseMin(c);
    // Warm starts that break the balance constraint are discarded.
    if (std::abs(y.dot(a)) > 1e-10 * static_cast<double>(n) * c) a.setZero();
  }
  VectorXd g = q * a - VectorXd::Ones(n);

  const long max_iter = options.max_passes > 0 ? options.max_passes * static_cast<long>(n)
                                               : std::max(10'000'000L, 100L * static_cast<long>(n));

  SvmDualSolution sol;
  auto* trace = options.objective_trace;
  if (trace) trace->push_back(0.5 * a.dot(g - VectorXd::Ones(n)));

  long iter = 0;
  for (;; ++iter) {
    Index i = -1, j = -1;
    double gap = max_violation(y, a, g, c, &i, &j);
    if (gap <= problem.tol) {
      // Confirm against a fresh gradient before stopping.
      g.noalias() = q * a;
      g.array() -= 1.0;
      gap = max_violation(y, a, g, c, &i, &j);
      if (gap <= problem.tol) {
        sol.converged = true;
        break;
      }
    }
    if (iter >= max_iter) break;

    const double old_i = a[i];
    const double old_j = a[j];
    if (y[i] != y[j]) {
      double quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (-g[i] - g[j]) / quad;
      const double diff = a[i] - a[j];
      a[i] += delta;
      a[j] += delta;
      if (diff > 0.0) {
        if (a[j] < 0.0) {
          a[j] = 0.0;
          a[i] = diff;
        }
      } else if (a[i] < 0.0) {
        a[i] = 0.0;
        a[j] = -diff;
      }
      if (diff > 0.0) {
        if (a[i] > c) {
          a[i] = c;
          a[j] = c - diff;
        }
      } else if (a[j] > c) {
        a[j] = c;
        a[i] = c + diff;
      }
    } else {
      double quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (g[i] - g[j]) / quad;
      const double sum = a[i] + a[j];
      a[i] -= delta;
      a[j] += delta;
      if (sum > c) {
        if (a[i] > c) {
          a[i] = c;
          a[j] = sum - c;
        }
      } else if (a[j] < 0.0) {
        a[j] = 0.0;
        a[i] = sum;
      }
      if (sum > c) {
        if (a[j] > c) {
          a[j] = c;
          a[i] = sum - c;
        }
      } else if (a[i] < 0.0) {
        a[i] = 0.0;
        a[j] = sum;
      }
    }
    const double di = a[i] - old_i;
    const double dj = a[j] - old_j;
    g.noalias() += q.col(i) * di + q.col(j) * dj;
    if (trace) trace->push_back(0.5 * a.dot(g - VectorXd::Ones(n)));
  }

  // Fresh gradient so the reported quantities carry no accumulated drift.
  const VectorXd qa = q * a;
  g = qa - VectorXd::Ones(n);
  sol.alphas = a;
  sol.iterations = iter;
  sol.dual_objective = -a.sum() + 0.5 * a.dot(qa);
  sol.kkt_residual = max_violation(y, a, g, c, nullptr, nullptr);
  sol.bias_t = bias_from_fitted(y, a, y.cwiseProduct(qa), c);
  return sol;
}

}  // namespace psmm
