#include "mns/lasso.hpp"

#include <cmath>
#include <string>

#include "mns/errors.hpp"

namespace mns {
namespace {

void validate(const GramLassoProblem& prob) {
  const auto q = prob.gram.rows();
  if (prob.gram.cols() != q || prob.linear.size() != q ||
      prob.penalty_weights.size() != q) {
    throw DimensionError("lasso problem: gram " + std::to_string(prob.gram.rows()) +
                         "x" + std::to_string(prob.gram.cols()) + ", linear " +
                         std::to_string(prob.linear.size()) + ", weights " +
                         std::to_string(prob.penalty_weights.size()));
  }
  if (!prob.nonneg_mask.empty() && static_cast<Eigen::Index>(prob.nonneg_mask.size()) != q) {
    throw DimensionError("lasso problem: nonneg mask length differs from q");
  }
  if (!prob.gram.allFinite() || !prob.linear.allFinite() ||
      !std::isfinite(prob.response_ss)) {
    throw NumericError("lasso problem has non-finite entries");
  }
  for (Eigen::Index j = 0; j < q; ++j) {
    const double w = prob.penalty_weights[j];
    if (std::isnan(w) || w < 0) throw DomainError("lasso penalty weights must be >= 0");
  }
}

}  // namespace

double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

GramLassoProblem GramLassoProblem::from(const LassoProblem& prob) {
  if (prob.design.rows() != prob.response.size()) {
    throw DimensionError("lasso problem: design has " + std::to_string(prob.design.rows()) +
                         " rows but response has " + std::to_string(prob.response.size()));
  }
  if (!prob.design.allFinite() || !prob.response.allFinite()) {
    throw NumericError("lasso problem has non-finite entries");
  }
  GramLassoProblem g;
  g.gram = prob.design.transpose() * prob.design;
  g.linear = prob.design.transpose() * prob.response;
  g.response_ss = prob.response.squaredNorm();
  g.penalty_weights = prob.penalty_weights;
  g.nonneg_mask = prob.nonneg_mask;
  return g;
}

double lasso_objective(const GramLassoProblem& prob, const Eigen::VectorXd& beta) {
  double penalty = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    if (beta[j] != 0.0) penalty += prob.penalty_weights[j] * std::abs(beta[j]);
  }
  return 0.5 * beta.dot(prob.gram * beta) - prob.linear.dot(beta) +
         0.5 * prob.response_ss + penalty;
}

double lasso_objective(const LassoProblem& prob, const Eigen::VectorXd& beta) {
  double penalty = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    if (beta[j] != 0.0) penalty += prob.penalty_weights[j] * std::abs(beta[j]);
  }
  return 0.5 * (prob.response - prob.design * beta).squaredNorm() + penalty;
}

LassoSolution solve_lasso(const LassoProblem& prob, const LassoOptions& opts,
                          const std::optional<Eigen::VectorXd>& warm_start) {
  return solve_lasso_gram(GramLassoProblem::from(prob), opts, warm_start);
}

LassoSolution solve_lasso_gram(const GramLassoProblem& prob, const LassoOptions& opts,
                               const std::optional<Eigen::VectorXd>& warm_start) {
  validate(prob);
  if (!(opts.tol > 0)) throw DomainError("lasso tolerance must be > 0");
  if (opts.max_iter < 1) throw DomainError("lasso max_iter must be >= 1");

  const Eigen::Index q = prob.gram.rows();
  const auto& Q = prob.gram;
  const auto& w = prob.penalty_weights;
  auto masked = [&](Eigen::Index j) {
    return !prob.nonneg_mask.empty() && prob.nonneg_mask[j];
  };

  LassoSolution sol;
  sol.coefficients = Eigen::VectorXd::Zero(q);
  if (warm_start) {
    if (warm_start->size() != q) throw DimensionError("warm start length differs from q");
    if (!warm_start->allFinite()) throw NumericError("warm start is not finite");
    sol.coefficients = *warm_start;
    for (Eigen::Index j = 0; j < q; ++j) {
      if (masked(j) && sol.coefficients[j] < 0) sol.coefficients[j] = 0;
      if (Q(j, j) <= 0) sol.coefficients[j] = 0;
    }
  }
  auto& beta = sol.coefficients;
  Eigen::VectorXd Qb = Q * beta;

  // One coordinate update; returns |change|.
  auto update = [&](Eigen::Index j) -> double {
    const double qjj = Q(j, j);
    if (qjj <= 0) return 0.0;
    const double old = beta[j];
    const double partial = prob.linear[j] - Qb[j] + qjj * old;
    double next = soft_threshold(partial, w[j]) / qjj;
    if (masked(j) && next < 0) next = 0.0;
    const double delta = next - old;
    if (delta != 0.0) {
      beta[j] = next;
      Qb.noalias() += Q.col(j) * delta;
    }
    return std::abs(delta);
  };

  std::vector<Eigen::Index> active;
  active.reserve(q);
  int sweeps = 0;
  while (sweeps < opts.max_iter) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < q; ++j) max_change = std::max(max_change, update(j));
    ++sweeps;
    if (opts.record_trace) sol.trace.push_back(lasso_objective(prob, beta));
    if (max_change < opts.tol) {
      sol.converged = true;
      break;
    }
    // Iterate on the current support until it settles, then re-check all
    // coordinates with a full sweep.
    active.clear();
    for (Eigen::Index j = 0; j < q; ++j) {
      if (beta[j] != 0.0) active.push_back(j);
    }
    while (sweeps < opts.max_iter) {
      double inner = 0.0;
      for (auto j : active) inner = std::max(inner, update(j));
      ++sweeps;
      if (opts.record_trace) sol.trace.push_back(lasso_objective(prob, beta));
      if (inner < opts.tol) break;
    }
  }
  sol.iterations = sweeps;
  sol.objective = lasso_objective(prob, beta);
  if (!std::isfinite(sol.objective)) throw NumericError("lasso objective is not finite");
  return sol;
}

}  // namespace mns
