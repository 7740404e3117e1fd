#include "mns/glasso.hpp"

#include <cmath>

#include "mns/errors.hpp"
#include "mns/estimator.hpp"
#include "mns/lasso.hpp"

namespace mns {

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& data) {
  if (data.rows() < 2) throw DomainError("sample covariance needs n >= 2");
  if (!data.allFinite()) throw NumericError("sample covariance: non-finite data");
  const Eigen::MatrixXd centered = data.rowwise() - data.colwise().mean();
  return (centered.transpose() * centered) / static_cast<double>(data.rows());
}

Eigen::MatrixXd GlassoProblem::penalty_matrix() const {
  const auto p = sample_cov.rows();
  if (const auto* scalar = std::get_if<double>(&penalty)) {
    if (!(*scalar >= 0)) throw DomainError("glasso penalty must be >= 0");
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(p, p, *scalar);
    m.diagonal().setZero();
    return m;
  }
  const auto& m = std::get<Eigen::MatrixXd>(penalty);
  if (m.rows() != p || m.cols() != p) throw DimensionError("glasso penalty matrix shape differs from S");
  if (!m.allFinite() || (m.array() < 0).any()) throw DomainError("glasso penalty entries must be >= 0");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 0) throw DomainError("glasso penalty matrix is not symmetric");
  return m;
}

EdgeSet GlassoSolution::support() const {
  const auto& t = theta.theta();
  const int p = theta.p();
  EdgeSet out(p);
  for (int u = 0; u < p; ++u) {
    for (int v = u + 1; v < p; ++v) {
      if (t(u, v) != 0.0) out.insert(u, v);
    }
  }
  return out;
}

double glasso_objective(const Eigen::MatrixXd& sample_cov, const Eigen::MatrixXd& penalty,
                        const Eigen::MatrixXd& theta) {
  Eigen::LLT<Eigen::MatrixXd> llt(theta);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -logdet + (sample_cov.cwiseProduct(theta)).sum() +
         (penalty.cwiseProduct(theta.cwiseAbs())).sum();
}

double glasso_lambda_max(const Eigen::MatrixXd& sample_cov) {
  Eigen::MatrixXd off = sample_cov.cwiseAbs();
  off.diagonal().setZero();
  return off.maxCoeff();
}

GlassoSolution solve_glasso(const GlassoProblem& prob, const GlassoOptions& opts,
                            const GlassoSolution* warm_start) {
  const auto p = prob.sample_cov.rows();
  if (p < 1 || prob.sample_cov.cols() != p) throw DimensionError("glasso: S must be square");
  if (!prob.sample_cov.allFinite()) throw NumericError("glasso: S has non-finite entries");
  const double scale = std::max(1.0, prob.sample_cov.cwiseAbs().maxCoeff());
  if ((prob.sample_cov - prob.sample_cov.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw DomainError("glasso: S is not symmetric");
  }
  if (!(opts.tol > 0) || opts.max_iter < 1) throw DomainError("glasso: bad options");
  const Eigen::MatrixXd penalty = prob.penalty_matrix();

  GlassoSolution sol;
  Eigen::MatrixXd s = 0.5 * (prob.sample_cov + prob.sample_cov.transpose());
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
    const double min_eig = es.eigenvalues().minCoeff();
    if (min_eig < opts.ridge_trigger) {
      s.diagonal().array() += opts.ridge;
      sol.ridge_applied = true;
      if (min_eig + opts.ridge <= 0) throw NumericError("glasso: S is not positive semidefinite");
    }
  }

  Eigen::MatrixXd w = s;
  w.diagonal() += penalty.diagonal();
  Eigen::MatrixXd coef = Eigen::MatrixXd::Zero(p, p);
  if (warm_start != nullptr && warm_start->coefficients.rows() == p) {
    coef = warm_start->coefficients;
    w = warm_start->covariance;
    w.diagonal() = s.diagonal() + penalty.diagonal();
  }

  double off_mean = 0.0;
  if (p > 1) off_mean = (s.cwiseAbs().sum() - s.diagonal().cwiseAbs().sum()) / static_cast<double>(p * (p - 1));
  const double threshold = opts.tol * std::max(off_mean, 1e-12);

  LassoOptions inner;
  inner.tol = opts.inner_tol;
  inner.max_iter = 10000;

  if (p > 1) {
    for (int it = 1; it <= opts.max_iter; ++it) {
      double change = 0.0;
      for (Eigen::Index j = 0; j < p; ++j) {
        const auto idx = others(static_cast<int>(j), static_cast<int>(p));
        GramLassoProblem sub;
        sub.gram = w(idx, idx);
        sub.linear = s(idx, j);
        sub.penalty_weights = penalty(idx, j);
        const Eigen::VectorXd warm = coef(idx, j);
        const auto lasso = solve_lasso_gram(sub, inner, warm);
        coef(idx, j) = lasso.coefficients;
        const Eigen::VectorXd w12 = sub.gram * lasso.coefficients;
        change += (w(idx, j) - w12).cwiseAbs().sum();
        w(idx, j) = w12;
        w(j, idx) = w12.transpose();
      }
      sol.iterations = it;
      if (change / static_cast<double>(p * (p - 1)) < threshold) {
        sol.converged = true;
        break;
      }
    }
  } else {
    sol.converged = true;
  }

  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto idx = others(static_cast<int>(j), static_cast<int>(p));
    const Eigen::VectorXd b = coef(idx, j);
    const double denom = w(j, j) - w(idx, j).dot(b);
    if (!(denom > 0)) throw NumericError("glasso: non-positive diagonal in precision");
    const double tjj = 1.0 / denom;
    theta(j, j) = tjj;
    theta(idx, j) = -b * tjj;
  }
  theta = 0.5 * (theta + theta.transpose()).eval();
  sol.theta = PrecisionMatrix(std::move(theta));
  if (!sol.theta.is_positive_definite()) throw NumericError("glasso: estimate is not positive definite");
  sol.covariance = std::move(w);
  sol.coefficients = std::move(coef);
  return sol;
}

std::vector<EdgeSet> glasso_path(const Eigen::MatrixXd& sample_cov,
                                 const std::vector<double>& lambdas, const GlassoOptions& opts) {
  std::vector<EdgeSet> out;
  out.reserve(lambdas.size());
  GlassoSolution prev;
  bool have_prev = false;
  for (double lambda : lambdas) {
    GlassoProblem prob{sample_cov, lambda};
    auto sol = solve_glasso(prob, opts, have_prev ? &prev : nullptr);
    out.push_back(sol.support());
    prev = std::move(sol);
    have_prev = true;
  }
  return out;
}

EdgeSet fit_pooled(const CohortData& cohort, double lambda, const GlassoOptions& opts) {
  return solve_glasso({sample_covariance(cohort.pooled()), lambda}, opts).support();
}

std::vector<EdgeSet> fit_independent(const CohortData& cohort, double lambda,
                                     const GlassoOptions& opts) {
  std::vector<EdgeSet> out;
  for (const auto& x : cohort.subjects()) {
    out.push_back(solve_glasso({sample_covariance(x), lambda}, opts).support());
  }
  return out;
}

}  // namespace mns
