#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mns/cohort.hpp"
#include "mns/glasso.hpp"
#include "mns/random.hpp"

namespace mns {

struct StabilityConfig {
  /// Bootstrap replicates per subject.
  int B = 200;
  /// Penalty randomization amplitude.
  double c = 0.25;
  /// StARS instability threshold.
  double stars_beta = 0.05;
  int stars_subsamples = 20;
  int stars_grid = 30;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  GlassoOptions glasso{};

  void validate() const;
};

struct StarsResult {
  double lambda = 0.0;
  std::size_t index = 0;
  /// Descending penalty grid.
  std::vector<double> grid;
  /// Mean edge instability per grid point, before monotonization.
  std::vector<double> instability;
  /// False when every grid point met the threshold and the smallest penalty
  /// was returned.
  bool crossed = true;
};

/// Subsample size: 10 sqrt(n) when n > 144, else 0.8 n.
int stars_subsample_size(int n);

/// StARS: over a descending grid in [0.01, 1] x lambda_max, estimate each
/// edge's selection frequency theta_e on subsamples drawn without
/// replacement, take instability 2 theta_e (1 - theta_e) averaged over edges,
/// monotonize it by a running maximum from the top of the grid, and return
/// the smallest penalty whose monotonized instability stays <= stars_beta.
StarsResult stars_select_lambda(const Eigen::MatrixXd& data, const StabilityConfig& cfg, Rng& rng);

struct RandomPenalty {
  Eigen::MatrixXd matrix;
  /// Some entries would have been negative and were set to zero.
  bool clamped = false;
};

/// Symmetric p x p matrix with off-diagonal entries lambda + c lambda_max W,
/// W = +-1 with equal probability, and zero diagonal.
RandomPenalty randomized_penalty_matrix(int p, double lambda, double lambda_max, double c, Rng& rng);

struct BootstrapResult {
  /// Fraction of replicates selecting each edge; zero diagonal.
  Eigen::MatrixXd frequency;
  /// Replicates that produced an estimate.
  int effective_B = 0;
  int failures = 0;
  int clamped_draws = 0;
};

/// Replicate b resamples rows with replacement and draws its penalty from
/// Rng::stream(seed, {stream_tag, b}).
BootstrapResult bootstrap_networks(const Eigen::MatrixXd& data, double lambda, double lambda_max,
                                   const StabilityConfig& cfg, std::uint64_t stream_tag);

struct BetaBinomialMoments {
  Eigen::MatrixXd mu;
  /// Clamped to [0, 1]; 0 where degenerate.
  Eigen::MatrixXd rho;
  /// Method-of-moments value before clamping; NaN where degenerate.
  Eigen::MatrixXd rho_raw;
  /// mu is exactly 0 or 1, so rho is undefined.
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> degenerate;
};

/// mu = mean_i Y_i; rho = B/(B-1) * sum_i (mu - Y_i)^2 / (mu (1-mu) (N-1)) - 1/(B-1).
BetaBinomialMoments beta_binomial_moments(std::span<const Eigen::MatrixXd> frequencies, int B);

struct StabilityResult {
  Eigen::MatrixXd mu_pop;
  Eigen::MatrixXd rho_pop;
  Eigen::MatrixXd rho_raw;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> degenerate;
  std::vector<Eigen::MatrixXd> per_subject_freq;
  std::vector<double> lambdas;
  std::vector<double> lambda_max;
  std::vector<int> effective_B;
  std::vector<bool> stars_crossed;
  int clamped_draws = 0;
};

StabilityResult run_stability(const CohortData& cohort, const StabilityConfig& cfg);

/// Edges whose score exceeds `threshold`.
EdgeSet threshold_scores(const Eigen::MatrixXd& scores, double threshold);

}  // namespace mns
