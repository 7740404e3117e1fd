#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "mns/errors.hpp"
#include "mns/glasso.hpp"
#include "mns/simulator.hpp"
#include "mns/stability.hpp"
#include "support/oracles.hpp"

namespace mns {
namespace {

using testing::random_matrix;

EdgeSet network_at(const Eigen::MatrixXd& data, double lambda) {
  return solve_glasso({sample_covariance(data), lambda}).support();
}

TEST(Stars, SubsampleSize) {
  EXPECT_EQ(stars_subsample_size(400), 200);
  EXPECT_EQ(stars_subsample_size(100), 80);
}

TEST(Stars, NullDataGivesNearEmptyNetwork) {
  int sparse = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const Eigen::MatrixXd x = random_matrix(rng, 400, 5);
    StabilityConfig cfg;
    const auto sel = stars_select_lambda(x, cfg, rng);
    if (network_at(x, sel.lambda).size() <= 1) ++sparse;
  }
  EXPECT_GE(sparse, 18);
}

TEST(Stars, FindsPerfectlyCorrelatedPair) {
  int found = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(100 + seed);
    Eigen::MatrixXd x = random_matrix(rng, 400, 5);
    x.col(3) = x.col(1);
    StabilityConfig cfg;
    const auto sel = stars_select_lambda(x, cfg, rng);
    if (network_at(x, sel.lambda).contains(1, 3)) ++found;
  }
  EXPECT_GE(found, 18);
}

TEST(Stars, SmallerThresholdNeverLowersLambda) {
  Rng data_rng(7);
  Eigen::MatrixXd x = random_matrix(data_rng, 200, 6);
  x.col(1) += 0.6 * x.col(0);
  x.col(4) += 0.4 * x.col(2);
  double previous = 0.0;
  for (double beta : {0.2, 0.1, 0.05, 0.01, 1e-9}) {
    StabilityConfig cfg;
    cfg.stars_beta = beta;
    Rng rng(8);
    const auto sel = stars_select_lambda(x, cfg, rng);
    EXPECT_GE(sel.lambda, previous);
    previous = sel.lambda;
  }
  // Zero tolerance leaves only the empty-graph end of the grid.
  EXPECT_TRUE(network_at(x, previous).size() <= 1);
}

TEST(Stars, GridIsDescendingWithinLambdaMax) {
  Rng rng(9);
  const Eigen::MatrixXd x = random_matrix(rng, 100, 4);
  StabilityConfig cfg;
  const auto sel = stars_select_lambda(x, cfg, rng);
  ASSERT_EQ(sel.grid.size(), static_cast<std::size_t>(cfg.stars_grid));
  EXPECT_NEAR(sel.grid.front(), glasso_lambda_max(sample_covariance(x)), 1e-12);
  for (std::size_t k = 1; k < sel.grid.size(); ++k) EXPECT_LT(sel.grid[k], sel.grid[k - 1]);
  EXPECT_EQ(sel.lambda, sel.grid[sel.index]);
}

TEST(Stars, RejectsShortSeries) {
  Rng rng(10);
  const Eigen::MatrixXd x = random_matrix(rng, 19, 3);
  EXPECT_THROW(stars_select_lambda(x, StabilityConfig{}, rng), DomainError);
}

TEST(RandomPenalty, ConstantWithoutRandomization) {
  Rng rng(11);
  const auto pen = randomized_penalty_matrix(5, 0.3, 0.9, 0.0, rng);
  EXPECT_FALSE(pen.clamped);
  for (int j = 0; j < 5; ++j)
    for (int k = 0; k < 5; ++k) EXPECT_EQ(pen.matrix(j, k), j == k ? 0.0 : 0.3);
}

TEST(RandomPenalty, TwoLevelsInEqualProportion) {
  Rng rng(12);
  const double lambda = 0.4;
  int high = 0;
  int total = 0;
  while (total < 10000) {
    const auto pen = randomized_penalty_matrix(20, lambda, lambda, 0.25, rng);
    for (int j = 0; j < 20; ++j) {
      for (int k = j + 1; k < 20; ++k) {
        const double x = pen.matrix(j, k);
        const bool is_low = std::abs(x - 0.75 * lambda) < 1e-15;
        const bool is_high = std::abs(x - 1.25 * lambda) < 1e-15;
        EXPECT_TRUE(is_low || is_high);
        high += is_high;
        ++total;
      }
    }
  }
  EXPECT_NEAR(static_cast<double>(high) / total, 0.5, 0.02);
}

TEST(RandomPenalty, SymmetricWithZeroDiagonal) {
  Rng rng(13);
  for (int draw = 0; draw < 50; ++draw) {
    const auto pen = randomized_penalty_matrix(7, 0.2, 0.5, 0.25, rng);
    EXPECT_EQ(pen.matrix, pen.matrix.transpose());
    EXPECT_TRUE(pen.matrix.diagonal().isZero(0.0));
  }
}

TEST(RandomPenalty, ClampsNegativeEntries) {
  Rng rng(14);
  const auto pen = randomized_penalty_matrix(30, 0.1, 1.0, 0.25, rng);
  EXPECT_TRUE(pen.clamped);
  EXPECT_GE(pen.matrix.minCoeff(), 0.0);
  EXPECT_THROW(randomized_penalty_matrix(3, 0.1, 1.0, -0.1, rng), DomainError);
}

TEST(Bootstrap, HugePenaltySelectsNothing) {
  Rng rng(15);
  const Eigen::MatrixXd x = random_matrix(rng, 50, 4);
  StabilityConfig cfg;
  cfg.B = 20;
  const auto res = bootstrap_networks(x, 1e6, 1e6, cfg, 0);
  EXPECT_TRUE(res.frequency.isZero(0.0));
  EXPECT_EQ(res.effective_B, 20);
}

TEST(Bootstrap, DominantEdgeAlwaysSelected) {
  Rng rng(16);
  Eigen::MatrixXd x = random_matrix(rng, 60, 4);
  x.col(2) = x.col(0) + 0.01 * x.col(2);
  StabilityConfig cfg;
  cfg.B = 30;
  cfg.c = 0.0;
  const auto res = bootstrap_networks(x, 0.05, 1.0, cfg, 0);
  EXPECT_EQ(res.frequency(0, 2), 1.0);
  EXPECT_EQ(res.frequency(2, 0), 1.0);
}

TEST(Bootstrap, FrequenciesAreMultiplesOfOneOverB) {
  Rng rng(17);
  const Eigen::MatrixXd x = random_matrix(rng, 40, 5);
  StabilityConfig cfg;
  cfg.B = 25;
  const double lmax = glasso_lambda_max(sample_covariance(x));
  const auto res = bootstrap_networks(x, 0.3 * lmax, lmax, cfg, 3);
  for (Eigen::Index j = 0; j < 5; ++j) {
    for (Eigen::Index k = 0; k < 5; ++k) {
      const double scaled = res.frequency(j, k) * 25.0;
      EXPECT_NEAR(scaled, std::round(scaled), 1e-9);
      EXPECT_GE(res.frequency(j, k), 0.0);
      EXPECT_LE(res.frequency(j, k), 1.0);
    }
  }
  EXPECT_TRUE(res.frequency.diagonal().isZero(0.0));
}

TEST(Bootstrap, OneMoreReplicateMovesFrequenciesBoundedly) {
  Rng rng(18);
  const Eigen::MatrixXd x = random_matrix(rng, 60, 6);
  const double lmax = glasso_lambda_max(sample_covariance(x));
  StabilityConfig cfg;
  cfg.seed = 5;
  cfg.B = 50;
  const auto a = bootstrap_networks(x, 0.4 * lmax, lmax, cfg, 1);
  cfg.B = 51;
  const auto b = bootstrap_networks(x, 0.4 * lmax, lmax, cfg, 1);
  EXPECT_LE((a.frequency - b.frequency).cwiseAbs().maxCoeff(), 1.0 / 50 + 1.0 / 51);
}

TEST(Bootstrap, IndependentOfThreadCount) {
  Rng rng(19);
  const Eigen::MatrixXd x = random_matrix(rng, 50, 5);
  const double lmax = glasso_lambda_max(sample_covariance(x));
  StabilityConfig cfg;
  cfg.B = 24;
  cfg.threads = 1;
  const auto a = bootstrap_networks(x, 0.3 * lmax, lmax, cfg, 2);
  cfg.threads = 4;
  const auto b = bootstrap_networks(x, 0.3 * lmax, lmax, cfg, 2);
  EXPECT_EQ(a.frequency, b.frequency);
}

std::vector<Eigen::MatrixXd> scalar_frequencies(std::initializer_list<double> ys) {
  std::vector<Eigen::MatrixXd> out;
  for (double y : ys) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 2);
    m(0, 1) = m(1, 0) = y;
    out.push_back(m);
  }
  return out;
}

// Method-of-moments intra-class correlation, evaluated term by term.
double rho_oracle(const std::vector<double>& y, int b) {
  double mu = 0.0;
  for (double v : y) mu += v;
  mu /= static_cast<double>(y.size());
  double ss = 0.0;
  for (double v : y) ss += (mu - v) * (mu - v);
  const double n = static_cast<double>(y.size());
  return (b / (b - 1.0)) * ss / (mu * (1.0 - mu) * (n - 1.0)) - 1.0 / (b - 1.0);
}

TEST(BetaBinomial, HandComputedDispersion) {
  const auto ys = scalar_frequencies({0.2, 0.8});
  const auto m = beta_binomial_moments(ys, 10);
  EXPECT_DOUBLE_EQ(m.mu(0, 1), 0.5);
  EXPECT_NEAR(m.rho(0, 1), 0.6889, 1e-4);
  EXPECT_NEAR(m.rho(0, 1), rho_oracle({0.2, 0.8}, 10), 1e-12);
  EXPECT_NEAR(m.rho(0, 1), 62.0 / 90.0, 1e-12);
}

TEST(BetaBinomial, NegativeEstimateClampedToZero) {
  const auto m = beta_binomial_moments(scalar_frequencies({0.5, 0.5}), 10);
  EXPECT_NEAR(m.rho_raw(0, 1), -1.0 / 9.0, 1e-15);
  EXPECT_EQ(m.rho(0, 1), 0.0);
}

TEST(BetaBinomial, DegenerateMeanFlagged) {
  const auto m = beta_binomial_moments(scalar_frequencies({1.0, 1.0, 1.0}), 10);
  EXPECT_EQ(m.mu(0, 1), 1.0);
  EXPECT_TRUE(m.degenerate(0, 1));
  EXPECT_EQ(m.rho(0, 1), 0.0);
  EXPECT_TRUE(std::isnan(m.rho_raw(0, 1)));
}

TEST(BetaBinomial, MatchesOracleOnRandomFrequencies) {
  Rng rng(20);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> y;
    std::vector<Eigen::MatrixXd> ms;
    for (int i = 0; i < 6; ++i) {
      y.push_back(static_cast<double>(rng.below(21)) / 20.0);
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 2);
      m(0, 1) = m(1, 0) = y.back();
      ms.push_back(m);
    }
    const auto m = beta_binomial_moments(ms, 20);
    if (m.degenerate(0, 1)) continue;
    EXPECT_NEAR(m.rho_raw(0, 1), rho_oracle(y, 20), 1e-12);
    EXPECT_GE(m.rho(0, 1), 0.0);
    EXPECT_LE(m.rho(0, 1), 1.0);
  }
}

TEST(BetaBinomial, InvariantUnderSubjectPermutation) {
  Rng rng(21);
  std::vector<Eigen::MatrixXd> ys;
  for (int i = 0; i < 5; ++i) {
    Eigen::MatrixXd m = (random_matrix(rng, 4, 4).array().abs() / 4.0).min(1.0).matrix();
    m = (0.5 * (m + m.transpose())).eval();
    m.diagonal().setZero();
    ys.push_back(m);
  }
  const auto a = beta_binomial_moments(ys, 40);
  std::vector<Eigen::MatrixXd> shuffled{ys[3], ys[0], ys[4], ys[2], ys[1]};
  const auto b = beta_binomial_moments(shuffled, 40);
  EXPECT_LT((a.mu - b.mu).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((a.rho - b.rho).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(a.rho, a.rho.transpose());
}

TEST(BetaBinomial, RequiresTwoSubjects) {
  EXPECT_THROW(beta_binomial_moments(scalar_frequencies({0.3}), 10), DomainError);
  EXPECT_THROW(beta_binomial_moments(scalar_frequencies({0.3, 0.4}), 1), DomainError);
}

TEST(RunStability, IdenticalSubjectsShowNoDispersion) {
  Rng rng(22);
  const Eigen::MatrixXd x = random_matrix(rng, 60, 5);
  const CohortData cohort(NodeSet::numbered(5), {x, x});
  StabilityConfig cfg;
  cfg.B = 30;
  cfg.stars_subsamples = 10;
  cfg.stars_grid = 10;
  const auto res = run_stability(cohort, cfg);
  // Both subjects share their bootstrap streams only through the seed, so
  // frequencies differ by resampling noise alone.
  EXPECT_LT(res.rho_pop.maxCoeff(), 0.2);
  EXPECT_EQ(res.lambdas[0], res.lambdas[1]);
}

TEST(RunStability, SmokeRunOnSimulatedCohort) {
  SimConfig sim;
  sim.p = 20;
  sim.subjects = 4;
  sim.n = 100;
  sim.e_ran = 8;
  sim.seed = 23;
  const auto cohort = simulate_cohort(sim).data;
  StabilityConfig cfg;
  cfg.B = 100;
  const auto res = run_stability(cohort, cfg);
  ASSERT_EQ(res.per_subject_freq.size(), 4u);
  EXPECT_GE(res.mu_pop.minCoeff(), 0.0);
  EXPECT_LE(res.mu_pop.maxCoeff(), 1.0);
  EXPECT_EQ(res.mu_pop, res.mu_pop.transpose());
  EXPECT_EQ(res.rho_pop, res.rho_pop.transpose());
  for (int b : res.effective_B) EXPECT_EQ(b, 100);
}

TEST(RunStability, IndependentOfThreadCount) {
  SimConfig sim;
  sim.p = 8;
  sim.subjects = 3;
  sim.n = 40;
  sim.e_ran = 3;
  sim.seed = 24;
  const auto cohort = simulate_cohort(sim).data;
  StabilityConfig cfg;
  cfg.B = 20;
  cfg.stars_subsamples = 8;
  cfg.stars_grid = 8;
  cfg.threads = 1;
  const auto a = run_stability(cohort, cfg);
  cfg.threads = 3;
  const auto b = run_stability(cohort, cfg);
  EXPECT_EQ(a.mu_pop, b.mu_pop);
  EXPECT_TRUE((a.rho_raw.array().isNaN() == b.rho_raw.array().isNaN()).all());
  EXPECT_EQ(a.rho_pop, b.rho_pop);
  EXPECT_EQ(a.lambdas, b.lambdas);
}

TEST(StabilityConfig, Validation) {
  StabilityConfig cfg;
  cfg.B = 1;
  EXPECT_THROW(cfg.validate(), DomainError);
  cfg = {};
  cfg.stars_beta = 0.5;
  EXPECT_THROW(cfg.validate(), DomainError);
  cfg = {};
  cfg.c = -1.0;
  EXPECT_THROW(cfg.validate(), DomainError);
}

TEST(ThresholdScores, StrictlyAbove) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(3, 3);
  s(0, 1) = s(1, 0) = 0.5;
  s(1, 2) = s(2, 1) = 0.2;
  const auto e = threshold_scores(s, 0.2);
  EXPECT_EQ(e.size(), 1u);
  EXPECT_TRUE(e.contains(0, 1));
}

}  // namespace
}  // namespace mns
