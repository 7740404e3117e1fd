#include "mns/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mns/errors.hpp"
#include "mns/parallel.hpp"

namespace mns {

void MnsConfig::validate() const {
  if (!(lambda1 >= 0) || !(lambda2 >= 0)) throw DomainError("MNS penalties must be >= 0");
  if (!(em_tol > 0)) throw DomainError("MNS em_tol must be > 0");
  if (em_max_iter < 1) throw DomainError("MNS em_max_iter must be >= 1");
  if (!(blup_tol >= 0)) throw DomainError("MNS blup_tol must be >= 0");
}

std::vector<int> others(int v, int p) {
  std::vector<int> idx;
  idx.reserve(p > 0 ? p - 1 : 0);
  for (int u = 0; u < p; ++u) {
    if (u != v) idx.push_back(u);
  }
  return idx;
}

long NodeStats::total_observations() const {
  long total = 0;
  for (int k : n) total += k;
  return total;
}

NodeStats NodeStats::from(const CohortGram& cohort, int node) {
  if (node < 0 || node >= cohort.p) {
    throw DomainError("node " + std::to_string(node) + " outside p=" + std::to_string(cohort.p));
  }
  const auto idx = others(node, cohort.p);
  NodeStats s;
  for (std::size_t i = 0; i < cohort.num_subjects(); ++i) {
    const auto& g = cohort.gram[i];
    s.gram.emplace_back(g(idx, idx));
    s.cross.emplace_back(g(idx, node));
    s.response_ss.push_back(g(node, node));
    s.n.push_back(cohort.n[i]);
  }
  return s;
}

NodeStats NodeStats::from_data(std::span<const Eigen::MatrixXd> designs,
                               std::span<const Eigen::VectorXd> responses) {
  if (designs.size() != responses.size()) {
    throw DimensionError("NodeStats: designs and responses differ in subject count");
  }
  NodeStats s;
  for (std::size_t i = 0; i < designs.size(); ++i) {
    const auto& x = designs[i];
    const auto& y = responses[i];
    if (x.rows() != y.size()) throw DimensionError("NodeStats: design/response row mismatch");
    if (i > 0 && x.cols() != designs[0].cols()) {
      throw DimensionError("NodeStats: subjects differ in predictor count");
    }
    if (!x.allFinite() || !y.allFinite()) throw NumericError("NodeStats: non-finite data");
    s.gram.emplace_back(x.transpose() * x);
    s.cross.emplace_back(x.transpose() * y);
    s.response_ss.push_back(y.squaredNorm());
    s.n.push_back(static_cast<int>(x.rows()));
  }
  return s;
}

Eigen::VectorXd e_step_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& cross,
                            const Eigen::VectorXd& beta, const Eigen::VectorXd& sigma_re) {
  const auto q = gram.rows();
  if (gram.cols() != q || cross.size() != q || beta.size() != q || sigma_re.size() != q) {
    throw DimensionError("e_step: inconsistent dimensions");
  }
  if (!gram.allFinite() || !cross.allFinite() || !beta.allFinite() || !sigma_re.allFinite()) {
    throw NumericError("e_step: non-finite input");
  }
  Eigen::VectorXd b = Eigen::VectorXd::Zero(q);
  std::vector<int> active;
  for (Eigen::Index j = 0; j < q; ++j) {
    if (sigma_re[j] != 0.0) active.push_back(static_cast<int>(j));
  }
  if (active.empty()) return b;

  const Eigen::VectorXd resid_cross = cross - gram * beta;
  const Eigen::VectorXd d = sigma_re(active);
  Eigen::MatrixXd system = d.asDiagonal() * gram(active, active) * d.asDiagonal();
  system.diagonal().array() += 1.0;
  const Eigen::VectorXd rhs = d.cwiseProduct(resid_cross(active));
  Eigen::LLT<Eigen::MatrixXd> llt(system);
  if (llt.info() != Eigen::Success) throw NumericError("e_step: factorization failed");
  const Eigen::VectorXd solved = llt.solve(rhs);
  b(active) = solved;
  return b;
}

Eigen::VectorXd e_step(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                       const Eigen::VectorXd& beta, const Eigen::VectorXd& sigma_re) {
  if (design.rows() != response.size()) throw DimensionError("e_step: design/response rows differ");
  if (!design.allFinite() || !response.allFinite()) throw NumericError("e_step: non-finite input");
  return e_step_gram(design.transpose() * design, design.transpose() * response, beta, sigma_re);
}

GramLassoProblem m_step_problem(const NodeStats& stats, std::span<const Eigen::VectorXd> blups,
                                double lambda1, double lambda2) {
  const auto q = stats.dim();
  const auto subjects = stats.num_subjects();
  if (blups.size() != subjects) throw DimensionError("m_step: one blup vector per subject");
  if (!(lambda1 >= 0) || !(lambda2 >= 0)) throw DomainError("m_step: penalties must be >= 0");

  GramLassoProblem prob;
  prob.gram = Eigen::MatrixXd::Zero(2 * q, 2 * q);
  prob.linear = Eigen::VectorXd::Zero(2 * q);
  prob.response_ss = 0.0;
  for (std::size_t i = 0; i < subjects; ++i) {
    const auto& g = stats.gram[i];
    const auto& b = blups[i];
    if (b.size() != q) throw DimensionError("m_step: blup length differs from p-1");
    if (!b.allFinite()) throw NumericError("m_step: non-finite blups");
    const Eigen::MatrixXd gb = g * b.asDiagonal();
    prob.gram.topLeftCorner(q, q) += g;
    prob.gram.topRightCorner(q, q) += gb;
    prob.gram.bottomRightCorner(q, q) += b.asDiagonal() * gb;
    prob.linear.head(q) += stats.cross[i];
    prob.linear.tail(q) += b.cwiseProduct(stats.cross[i]);
    prob.response_ss += stats.response_ss[i];
  }
  prob.gram.bottomLeftCorner(q, q) = prob.gram.topRightCorner(q, q).transpose();

  const double m = static_cast<double>(stats.total_observations());
  prob.penalty_weights.resize(2 * q);
  prob.penalty_weights.head(q).setConstant(m * lambda1);
  prob.penalty_weights.tail(q).setConstant(m * lambda2);
  prob.nonneg_mask.assign(2 * q, false);
  std::fill(prob.nonneg_mask.begin() + q, prob.nonneg_mask.end(), true);
  return prob;
}

MStepResult m_step(const NodeStats& stats, std::span<const Eigen::VectorXd> blups,
                   double lambda1, double lambda2, const std::optional<Eigen::VectorXd>& warm_start,
                   const LassoOptions& opts) {
  const auto q = stats.dim();
  const auto prob = m_step_problem(stats, blups, lambda1, lambda2);
  MStepResult out;
  if (warm_start) {
    Eigen::VectorXd start = *warm_start;
    if (start.size() != 2 * q) throw DimensionError("m_step: warm start length differs from 2(p-1)");
    start.tail(q) = start.tail(q).cwiseMax(0.0);
    out.start_objective = lasso_objective(prob, start);
  } else {
    out.start_objective = lasso_objective(prob, Eigen::VectorXd::Zero(2 * q));
  }
  out.solution = solve_lasso_gram(prob, opts, warm_start);
  out.beta = out.solution.coefficients.head(q);
  out.sigma_re = out.solution.coefficients.tail(q);
  return out;
}

double update_sigma2(std::span<const Eigen::VectorXd> residuals,
                     std::span<const Eigen::VectorXd> blups, int p, double floor) {
  if (residuals.size() != blups.size()) {
    throw DimensionError("update_sigma2: residuals and blups differ in subject count");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    num += residuals[i].squaredNorm() + blups[i].squaredNorm();
    den += static_cast<double>(residuals[i].size() + p);
  }
  if (den <= 0) throw DomainError("update_sigma2 needs at least one observation");
  return std::max(num / den, floor);
}

double subject_rss(const NodeStats& stats, std::size_t subject, const Eigen::VectorXd& beta,
                   const Eigen::VectorXd& sigma_re, const Eigen::VectorXd& blup) {
  const Eigen::VectorXd w = beta + sigma_re.cwiseProduct(blup);
  const double rss = stats.response_ss[subject] - 2.0 * w.dot(stats.cross[subject]) +
                     w.dot(stats.gram[subject] * w);
  return std::max(rss, 0.0);
}

double complete_data_objective(const NodeStats& stats, const Eigen::VectorXd& beta,
                               const Eigen::VectorXd& sigma_re, const Eigen::MatrixXd& blups,
                               double lambda1, double lambda2) {
  double loss = 0.0;
  for (std::size_t i = 0; i < stats.num_subjects(); ++i) {
    const Eigen::VectorXd b = blups.row(static_cast<Eigen::Index>(i)).transpose();
    loss += subject_rss(stats, i, beta, sigma_re, b) + b.squaredNorm();
  }
  const double m = static_cast<double>(stats.total_observations());
  return loss / (2.0 * m) + lambda1 * beta.lpNorm<1>() + lambda2 * sigma_re.lpNorm<1>();
}

MnsNodeFit fit_node(const NodeStats& stats, int node, const MnsConfig& cfg) {
  cfg.validate();
  const int q = stats.dim();
  const auto subjects = stats.num_subjects();
  if (subjects == 0) throw DomainError("fit_node: cohort has no subjects");
  if (q < 1) throw DomainError("fit_node: need p >= 2");
  for (int k : stats.n) {
    if (k < 2) throw DomainError("fit_node: every subject needs n >= 2 observations");
  }

  MnsNodeFit fit;
  fit.node = node;
  fit.beta = Eigen::VectorXd::Zero(q);
  fit.sigma_re = Eigen::VectorXd::Ones(q);
  fit.sigma2 = 1.0;
  fit.blups = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(subjects), q);

  std::vector<Eigen::VectorXd> blups(subjects);
  auto run_e_step = [&] {
    for (std::size_t i = 0; i < subjects; ++i) {
      blups[i] = e_step_gram(stats.gram[i], stats.cross[i], fit.beta, fit.sigma_re);
      fit.blups.row(static_cast<Eigen::Index>(i)) = blups[i].transpose();
    }
  };
  // b from the initial (beta, sigma) = (0, 1).
  run_e_step();

  const int p = q + 1;
  Eigen::VectorXd params(2 * q);
  for (int it = 1; it <= cfg.em_max_iter; ++it) {
    params << fit.beta, fit.sigma_re;
    auto ms = m_step(stats, blups, cfg.lambda1, cfg.lambda2, params, cfg.lasso);
    fit.m_step_converged = fit.m_step_converged && ms.solution.converged;
    fit.m_step_trace.emplace_back(ms.start_objective, ms.solution.objective);

    const double change = std::max((ms.beta - fit.beta).cwiseAbs().maxCoeff(),
                                   (ms.sigma_re - fit.sigma_re).cwiseAbs().maxCoeff());
    fit.beta = std::move(ms.beta);
    fit.sigma_re = std::move(ms.sigma_re);
    run_e_step();

    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < subjects; ++i) {
      num += subject_rss(stats, i, fit.beta, fit.sigma_re, blups[i]) + blups[i].squaredNorm();
      den += stats.n[i] + p;
    }
    fit.sigma2 = std::max(num / den, cfg.sigma2_floor);
    fit.objective_trace.push_back(complete_data_objective(stats, fit.beta, fit.sigma_re,
                                                          fit.blups, cfg.lambda1, cfg.lambda2));
    fit.em_iterations = it;
    if (change < cfg.em_tol) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

MnsNodeFit fit_node(const CohortGram& cohort, int node, const MnsConfig& cfg) {
  return fit_node(NodeStats::from(cohort, node), node, cfg);
}

MnsNodeFit fit_node(const CohortData& cohort, int node, const MnsConfig& cfg) {
  return fit_node(CohortGram::from(cohort), node, cfg);
}

bool MnsResult::all_converged() const {
  return std::all_of(node_fits.begin(), node_fits.end(),
                     [](const MnsNodeFit& f) { return f.converged; });
}

namespace {

// Directed coefficient matrix: row v holds node v's coefficients placed at
// the columns of the nodes they belong to.
template <class Get>
Eigen::MatrixXd directed(const std::vector<MnsNodeFit>& fits, int p, Get get) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p, p);
  for (const auto& f : fits) {
    const auto idx = others(f.node, p);
    const Eigen::VectorXd coef = get(f);
    for (std::size_t j = 0; j < idx.size(); ++j) m(f.node, idx[j]) = coef[static_cast<Eigen::Index>(j)];
  }
  return m;
}

void networks_from(const Eigen::MatrixXd& dir, double tol, Rule rule, EdgeSet& edges,
                   WeightedNetwork& weights) {
  const int p = static_cast<int>(dir.rows());
  std::vector<std::vector<int>> supports(p);
  for (int v = 0; v < p; ++v) {
    for (int u = 0; u < p; ++u) {
      if (u != v && std::abs(dir(v, u)) > tol) supports[v].push_back(u);
    }
  }
  edges = combine_neighborhoods(supports, rule);
  weights = WeightedNetwork(p);
  for (const auto& e : edges) weights.set(e.u, e.v, 0.5 * (dir(e.u, e.v) + dir(e.v, e.u)));
}

}  // namespace

MnsResult assemble(std::vector<MnsNodeFit> fits, int p, std::size_t num_subjects,
                   const MnsConfig& cfg) {
  if (static_cast<int>(fits.size()) != p) throw DimensionError("assemble: need one fit per node");
  std::sort(fits.begin(), fits.end(),
            [](const MnsNodeFit& a, const MnsNodeFit& b) { return a.node < b.node; });
  MnsResult r;
  r.p = p;
  r.config = cfg;
  networks_from(directed(fits, p, [](const MnsNodeFit& f) { return f.beta; }), 0.0, cfg.rule,
                r.population, r.population_weights);
  networks_from(directed(fits, p, [](const MnsNodeFit& f) { return f.sigma_re; }), 0.0, cfg.rule,
                r.variance, r.variance_weights);
  for (std::size_t i = 0; i < num_subjects; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    // Support comes from the BLUPs; weights report the subject's deviation
    // sigma o b_i.
    Eigen::MatrixXd dir_b = directed(fits, p, [row](const MnsNodeFit& f) {
      return Eigen::VectorXd(f.blups.row(row).transpose());
    });
    Eigen::MatrixXd dir_dev = directed(fits, p, [row](const MnsNodeFit& f) {
      return Eigen::VectorXd(f.sigma_re.cwiseProduct(f.blups.row(row).transpose()));
    });
    EdgeSet edges;
    WeightedNetwork unused;
    networks_from(dir_b, cfg.blup_tol, cfg.rule, edges, unused);
    WeightedNetwork w(p);
    for (const auto& e : edges) w.set(e.u, e.v, 0.5 * (dir_dev(e.u, e.v) + dir_dev(e.v, e.u)));
    r.subject_full.push_back(r.population.united(edges));
    r.subject_specific.push_back(std::move(edges));
    r.subject_specific_weights.push_back(std::move(w));
  }
  r.node_fits = std::move(fits);
  return r;
}

MnsResult fit_all(const CohortGram& cohort, const MnsConfig& cfg) {
  cfg.validate();
  if (cohort.p < 2) throw DomainError("fit_all: need p >= 2");
  std::vector<MnsNodeFit> fits(cohort.p);
  parallel_for(static_cast<std::size_t>(cohort.p), cfg.threads, [&](std::size_t v) {
    const int node = static_cast<int>(v);
    fits[v] = fit_node(NodeStats::from(cohort, node), node, cfg);
  });
  return assemble(std::move(fits), cohort.p, cohort.num_subjects(), cfg);
}

MnsResult fit_all(const CohortData& cohort, const MnsConfig& cfg) {
  return fit_all(CohortGram::from(cohort), cfg);
}

double lambda_max(const CohortGram& cohort) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(cohort.p, cohort.p);
  for (const auto& g : cohort.gram) s += g;
  double best = 0.0;
  for (int u = 0; u < cohort.p; ++u) {
    for (int v = u + 1; v < cohort.p; ++v) {
      const double denom = std::sqrt(s(u, u) * s(v, v));
      if (denom > 0) best = std::max(best, std::abs(s(u, v)) / denom);
    }
  }
  return best;
}

}  // namespace mns
