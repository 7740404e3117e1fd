#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mns/cohort.hpp"
#include "mns/graph.hpp"
#include "mns/lasso.hpp"

namespace mns {

struct MnsConfig {
  /// Fixed-effect (population) penalty.
  double lambda1 = 0.1;
  /// Random-effect scale penalty.
  double lambda2 = 0.1;
  double em_tol = 1e-4;
  int em_max_iter = 200;
  Rule rule = Rule::And;
  /// |BLUP| at or below this counts as zero when building subject networks.
  double blup_tol = 1e-8;
  double sigma2_floor = 1e-8;
  LassoOptions lasso{};
  /// Workers for fit_all; 0 = hardware concurrency.
  unsigned threads = 1;

  void validate() const;
};

/// Sufficient statistics of one node's regression across subjects: for
/// subject i, gram[i] = X'X over the other nodes, cross[i] = X'y, and
/// response_ss[i] = y'y, where y is the node's column.
struct NodeStats {
  std::vector<Eigen::MatrixXd> gram;
  std::vector<Eigen::VectorXd> cross;
  std::vector<double> response_ss;
  std::vector<int> n;

  static NodeStats from(const CohortGram& cohort, int node);
  /// Directly from per-subject designs and responses.
  static NodeStats from_data(std::span<const Eigen::MatrixXd> designs,
                             std::span<const Eigen::VectorXd> responses);

  int dim() const { return gram.empty() ? 0 : static_cast<int>(gram.front().rows()); }
  std::size_t num_subjects() const noexcept { return gram.size(); }
  long total_observations() const;
};

/// Indices of every node except `v`, in order. Coefficient j of node v's
/// regression belongs to node others(v, p)[j].
std::vector<int> others(int v, int p);

/// Posterior mean of the latent effect for one subject:
/// b = (D X'X D + I)^{-1} D X'(y - X beta), D = diag(sigma_re).
/// Coordinates with sigma_re == 0 are exactly zero.
Eigen::VectorXd e_step(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                       const Eigen::VectorXd& beta, const Eigen::VectorXd& sigma_re);

/// Same, from X'X and X'y.
Eigen::VectorXd e_step_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& cross,
                            const Eigen::VectorXd& beta, const Eigen::VectorXd& sigma_re);

struct MStepResult {
  Eigen::VectorXd beta;
  Eigen::VectorXd sigma_re;
  LassoSolution solution;
  /// M-step objective at the warm start, before descent.
  double start_objective = 0.0;
};

/// Joint lasso over the stacked design [X | X diag(b_i)] across subjects:
///   (1/2M) sum_i ||y_i - X_i beta - X_i diag(b_i) sigma||^2
///       + lambda1 ||beta||_1 + lambda2 ||sigma||_1,  sigma >= 0,
/// with M the total number of observations.
MStepResult m_step(const NodeStats& stats, std::span<const Eigen::VectorXd> blups,
                   double lambda1, double lambda2,
                   const std::optional<Eigen::VectorXd>& warm_start = std::nullopt,
                   const LassoOptions& opts = {});

/// The GramLassoProblem solved by m_step, in 1/2 ||.||^2 form.
GramLassoProblem m_step_problem(const NodeStats& stats, std::span<const Eigen::VectorXd> blups,
                                double lambda1, double lambda2);

/// sum_i (||r_i||^2 + b_i'b_i) / sum_i (n_i + p), floored at `floor`.
double update_sigma2(std::span<const Eigen::VectorXd> residuals,
                     std::span<const Eigen::VectorXd> blups, int p, double floor = 1e-8);

/// Residual sum of squares ||y_i - X_i(beta + sigma o b_i)||^2 from statistics.
double subject_rss(const NodeStats& stats, std::size_t subject, const Eigen::VectorXd& beta,
                   const Eigen::VectorXd& sigma_re, const Eigen::VectorXd& blup);

struct MnsNodeFit {
  int node = 0;
  Eigen::VectorXd beta;
  Eigen::VectorXd sigma_re;
  double sigma2 = 1.0;
  /// Row i holds subject i's latent effect b_i.
  Eigen::MatrixXd blups;
  int em_iterations = 0;
  bool converged = false;
  /// Every inner lasso solve converged.
  bool m_step_converged = true;
  /// Penalized complete-data objective after each EM iteration.
  std::vector<double> objective_trace;
  /// M-step objective (start, end) per iteration.
  std::vector<std::pair<double, double>> m_step_trace;
};

/// Penalized complete-data objective at fixed blups:
/// (1/2M) sum_i (||r_i||^2 + b_i'b_i) + lambda1 ||beta||_1 + lambda2 ||sigma||_1.
double complete_data_objective(const NodeStats& stats, const Eigen::VectorXd& beta,
                               const Eigen::VectorXd& sigma_re, const Eigen::MatrixXd& blups,
                               double lambda1, double lambda2);

MnsNodeFit fit_node(const NodeStats& stats, int node, const MnsConfig& cfg);
MnsNodeFit fit_node(const CohortGram& cohort, int node, const MnsConfig& cfg);
MnsNodeFit fit_node(const CohortData& cohort, int node, const MnsConfig& cfg);

struct MnsResult {
  int p = 0;
  MnsConfig config;
  EdgeSet population;
  WeightedNetwork population_weights;
  EdgeSet variance;
  WeightedNetwork variance_weights;
  /// Subject-specific random-effect edges, one per subject.
  std::vector<EdgeSet> subject_specific;
  /// Reparameterized random effects sigma o b_i, averaged over directions.
  std::vector<WeightedNetwork> subject_specific_weights;
  /// population ∪ subject_specific[i].
  std::vector<EdgeSet> subject_full;
  std::vector<MnsNodeFit> node_fits;

  bool all_converged() const;
};

/// Fits every node and assembles the three networks with cfg.rule.
MnsResult fit_all(const CohortGram& cohort, const MnsConfig& cfg);
MnsResult fit_all(const CohortData& cohort, const MnsConfig& cfg);

/// Assembly step of fit_all, exposed for re-combining existing node fits
/// under another rule.
MnsResult assemble(std::vector<MnsNodeFit> fits, int p, std::size_t num_subjects,
                   const MnsConfig& cfg);

/// Largest absolute correlation between any node and any other node, pooled
/// over subjects. With standardized data this is the smallest lambda1 for
/// which the population coefficients vanish.
double lambda_max(const CohortGram& cohort);

}  // namespace mns
