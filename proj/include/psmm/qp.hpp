#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace psmm {

/// minimize  -sum(a) + 1/4 sum_ij a_i a_j y_i y_j k_ij
/// s.t.      sum(a_i y_i) = 0,  0 <= a_i <= box
///
/// The 1/4 curvature comes from the ||w||^2 (not 1/2 ||w||^2) primal
/// penalty, so the primal weight is w = 1/2 sum a_i y_i z_i.
struct SvmDualProblem {
  Eigen::MatrixXd kernel;
  Eigen::VectorXd labels;  // entries in {-1, +1}
  double box = 1.0;
  double tol = 1e-8;
};

struct SvmDualSolution {
  Eigen::VectorXd alphas;
  double bias_t = 0.0;
  double dual_objective = 0.0;
  double kkt_residual = 0.0;
  long iterations = 0;
  bool converged = false;
};

struct SmoOptions {
  /// Iteration cap in units of n pair updates; 0 selects max(1e7, 100 n) updates.
  long max_passes = 0;
  /// Feasible warm start; the zero vector is used otherwise.
  std::optional<Eigen::VectorXd> initial_alphas;
  /// When set, receives the dual objective after every pair update.
  std::vector<double>* objective_trace = nullptr;
};

/// SMO with maximal-violating-pair working sets. The kernel is symmetrized
/// as (K + K^T)/2 first. Throws InfeasibleLabels for single-class labels;
/// an exhausted iteration budget returns the last iterate with
/// converged = false.
SvmDualSolution solve_svm_dual(const SvmDualProblem& problem, const SmoOptions& options = {});

double svm_dual_objective(const SvmDualProblem& problem, const Eigen::VectorXd& alphas);

/// Maximal KKT violation m(a) - M(a) of the gradient over the up/low index
/// sets; zero at an exact optimum.
double svm_kkt_residual(const SvmDualProblem& problem, const Eigen::VectorXd& alphas);

/// Intercept t of the decision rule y (f - t) with f_i = 1/2 sum_j a_j y_j k_ij.
/// Averages f_i - y_i over margin vectors (0 < a_i < box); without any, the
/// midpoint of the interval allowed by the bound vectors.
double recover_bias(const SvmDualProblem& problem, const Eigen::VectorXd& alphas);

}  // namespace psmm
