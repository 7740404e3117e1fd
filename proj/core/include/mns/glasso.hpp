#pragma once

#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "mns/cohort.hpp"
#include "mns/graph.hpp"

namespace mns {

/// (1/n) X'X after centering the columns of `data`. Requires n >= 2.
Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& data);

/// -log det(Theta) + tr(S Theta) + ||Lambda o Theta||_1.
///
/// A scalar penalty applies to off-diagonal entries only; a matrix penalty is
/// used as given, diagonal included.
struct GlassoProblem {
  Eigen::MatrixXd sample_cov;
  std::variant<double, Eigen::MatrixXd> penalty = 0.0;

  /// Full penalty matrix implied by `penalty`.
  Eigen::MatrixXd penalty_matrix() const;
};

struct GlassoOptions {
  /// Stop when the mean absolute change of the off-diagonal working
  /// covariance falls below tol times the mean absolute off-diagonal of S.
  double tol = 1e-4;
  int max_iter = 100;
  double inner_tol = 1e-7;
  /// Ridge added to S when its smallest eigenvalue is below ridge_trigger.
  double ridge = 1e-4;
  double ridge_trigger = 1e-8;
};

struct GlassoSolution {
  PrecisionMatrix theta;
  /// Working covariance estimate (inverse of theta at convergence).
  Eigen::MatrixXd covariance;
  /// Column j holds the regression coefficients of node j on the others,
  /// placed at the other nodes' rows; the diagonal is zero.
  Eigen::MatrixXd coefficients;
  int iterations = 0;
  bool converged = false;
  bool ridge_applied = false;

  EdgeSet support() const;
};

GlassoSolution solve_glasso(const GlassoProblem& prob, const GlassoOptions& opts = {},
                            const GlassoSolution* warm_start = nullptr);

double glasso_objective(const Eigen::MatrixXd& sample_cov, const Eigen::MatrixXd& penalty,
                        const Eigen::MatrixXd& theta);

/// Largest absolute off-diagonal of S: the smallest scalar penalty that
/// leaves the graph empty.
double glasso_lambda_max(const Eigen::MatrixXd& sample_cov);

/// Supports along a penalty grid, warm-starting each solve from the
/// previous one. The grid is traversed in the order given.
std::vector<EdgeSet> glasso_path(const Eigen::MatrixXd& sample_cov,
                                 const std::vector<double>& lambdas,
                                 const GlassoOptions& opts = {});

/// Pooled baseline: all subjects' rows concatenated into one sample.
EdgeSet fit_pooled(const CohortData& cohort, double lambda, const GlassoOptions& opts = {});

/// Independent baseline: one graphical lasso per subject with a shared penalty.
std::vector<EdgeSet> fit_independent(const CohortData& cohort, double lambda,
                                     const GlassoOptions& opts = {});

}  // namespace mns
