#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace mns {

/// sign(z) * max(|z| - gamma, 0).
double soft_threshold(double z, double gamma);

/// min_b 1/2 ||y - X b||^2 + sum_j w_j |b_j|, with b_j >= 0 where masked.
struct LassoProblem {
  Eigen::MatrixXd design;
  Eigen::VectorXd response;
  Eigen::VectorXd penalty_weights;
  /// Empty means no constraints.
  std::vector<bool> nonneg_mask;
};

/// The same problem expressed through sufficient statistics:
/// 1/2 b'Qb - c'b + 1/2 yy + sum_j w_j |b_j|, with Q = X'X, c = X'y, yy = y'y.
/// Both the M-step and the graphical lasso inner problem are posed this way.
struct GramLassoProblem {
  Eigen::MatrixXd gram;
  Eigen::VectorXd linear;
  double response_ss = 0.0;
  Eigen::VectorXd penalty_weights;
  std::vector<bool> nonneg_mask;

  static GramLassoProblem from(const LassoProblem& prob);
};

struct LassoOptions {
  double tol = 1e-6;
  int max_iter = 10000;
  /// Record the objective after every sweep into LassoSolution::trace.
  bool record_trace = false;
};

struct LassoSolution {
  Eigen::VectorXd coefficients;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;
};

double lasso_objective(const GramLassoProblem& prob, const Eigen::VectorXd& beta);
double lasso_objective(const LassoProblem& prob, const Eigen::VectorXd& beta);

/// Cyclic coordinate descent. Converged means the largest absolute
/// coefficient change over a full sweep fell below `tol`. Masked coordinates
/// are soft-thresholded then clamped at zero. Non-finite input throws
/// NumericError; bad shapes throw DimensionError.
LassoSolution solve_lasso(const LassoProblem& prob, const LassoOptions& opts = {},
                          const std::optional<Eigen::VectorXd>& warm_start = std::nullopt);

LassoSolution solve_lasso_gram(const GramLassoProblem& prob,
                               const LassoOptions& opts = {},
                               const std::optional<Eigen::VectorXd>& warm_start = std::nullopt);

}  // namespace mns
