#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "mns/errors.hpp"
#include "mns/simulator.hpp"
#include "mns/tuning.hpp"
#include "support/oracles.hpp"

namespace mns {
namespace {

using testing::random_matrix;

EdgeSet edges(int p, std::initializer_list<std::pair<int, int>> list) {
  EdgeSet e(p);
  for (const auto& [u, v] : list) e.insert(u, v);
  return e;
}

EdgeSet complete(int p) {
  EdgeSet e(p);
  for (int u = 0; u < p; ++u)
    for (int v = u + 1; v < p; ++v) e.insert(u, v);
  return e;
}

TEST(Penalties, KnownValues) {
  auto [a1, a2] = to_penalties({1.0, 2.0});
  EXPECT_DOUBLE_EQ(a1, 2.0);
  EXPECT_DOUBLE_EQ(a2, 0.0);
  auto [b1, b2] = to_penalties({0.0, 2.0});
  EXPECT_DOUBLE_EQ(b1, 0.0);
  EXPECT_DOUBLE_EQ(b2, 2.0 * std::sqrt(2.0));
  auto [c1, c2] = to_penalties({0.25, 1.0});
  EXPECT_DOUBLE_EQ(c1, 0.25);
  EXPECT_NEAR(c2, 3.0 * std::sqrt(2.0) / 4.0, 1e-15);
  EXPECT_NEAR(c2, 1.0607, 1e-4);
}

TEST(Penalties, RoundTrip) {
  Rng rng(1);
  for (int k = 0; k < 1000; ++k) {
    const AlphaLambda al{rng.uniform(), rng.uniform(1e-3, 10.0)};
    const auto [l1, l2] = to_penalties(al);
    const auto back = from_penalties(l1, l2);
    EXPECT_NEAR(back.alpha, al.alpha, 1e-12);
    EXPECT_NEAR(back.lambda, al.lambda, 1e-12 * al.lambda);
  }
}

TEST(Penalties, Validation) {
  EXPECT_THROW(to_penalties({1.5, 1.0}), DomainError);
  EXPECT_THROW(to_penalties({0.5, -1.0}), DomainError);
}

TEST(LogGrid, EndpointsAndSpacing) {
  const auto g = log_grid(2.0, 25, 0.01);
  ASSERT_EQ(g.size(), 25u);
  EXPECT_DOUBLE_EQ(g.front(), 2.0);
  EXPECT_NEAR(g.back(), 0.02, 1e-15);
  for (std::size_t k = 2; k < g.size(); ++k)
    EXPECT_NEAR(g[k] / g[k - 1], g[1] / g[0], 1e-12);
}

TEST(Rates, PerfectRecovery) {
  const auto truth = edges(5, {{0, 1}, {2, 3}});
  const auto r = tpr_fpr(truth, truth);
  EXPECT_EQ(r.tpr, 1.0);
  EXPECT_EQ(r.fpr, 0.0);
}

TEST(Rates, EmptyEstimate) {
  const auto r = tpr_fpr(EdgeSet(5), edges(5, {{0, 1}}));
  EXPECT_EQ(r.tpr, 0.0);
  EXPECT_EQ(r.fpr, 0.0);
}

TEST(Rates, HandCount) {
  const auto r = tpr_fpr(edges(4, {{0, 1}, {0, 2}}), edges(4, {{0, 1}, {2, 3}}));
  EXPECT_DOUBLE_EQ(r.tpr, 0.5);
  EXPECT_DOUBLE_EQ(r.fpr, 0.25);
}

TEST(Rates, DegenerateTruthsFlagged) {
  const auto a = tpr_fpr(edges(4, {{0, 1}}), EdgeSet(4));
  EXPECT_TRUE(a.empty_truth);
  EXPECT_EQ(a.tpr, 1.0);
  const auto b = tpr_fpr(complete(4), complete(4));
  EXPECT_TRUE(b.full_truth);
  EXPECT_EQ(b.fpr, 0.0);
}

TEST(Rates, InvariantUnderRelabeling) {
  Rng rng(2);
  const std::vector<int> perm{4, 2, 0, 5, 1, 3};
  for (int k = 0; k < 50; ++k) {
    EdgeSet est(6);
    EdgeSet truth(6);
    for (int u = 0; u < 6; ++u) {
      for (int v = u + 1; v < 6; ++v) {
        if (rng.coin()) est.insert(u, v);
        if (rng.coin()) truth.insert(u, v);
      }
    }
    const auto a = tpr_fpr(est, truth);
    const auto b = tpr_fpr(est.permuted(perm), truth.permuted(perm));
    EXPECT_EQ(a.tpr, b.tpr);
    EXPECT_EQ(a.fpr, b.fpr);
    EXPECT_GE(a.tpr, 0.0);
    EXPECT_LE(a.tpr, 1.0);
    EXPECT_GE(a.fpr, 0.0);
    EXPECT_LE(a.fpr, 1.0);
  }
}

TEST(Roc, TruthAtEveryPointGivesUnitArea) {
  const auto truth = edges(6, {{0, 1}, {1, 2}, {3, 5}});
  const std::vector<double> lambdas{0.3, 0.2, 0.1};
  const std::vector<EdgeSet> est(3, truth);
  EXPECT_DOUBLE_EQ(roc_sweep(lambdas, est, truth).auc, 1.0);
}

TEST(Roc, EmptyThenCompleteIsDiagonal) {
  const auto truth = edges(6, {{0, 1}, {1, 2}});
  const std::vector<double> lambdas{1.0, 0.0};
  const std::vector<EdgeSet> est{EdgeSet(6), complete(6)};
  const auto roc = roc_sweep(lambdas, est, truth);
  EXPECT_DOUBLE_EQ(roc.auc, 0.5);
  EXPECT_EQ(roc.points.front().fpr, 0.0);
  EXPECT_EQ(roc.points.back().tpr, 1.0);
}

TEST(Roc, RandomGuessingNearHalf) {
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    EdgeSet truth(15);
    for (int u = 0; u < 15; ++u)
      for (int v = u + 1; v < 15; ++v)
        if (rng.uniform() < 0.2) truth.insert(u, v);
    std::vector<double> lambdas;
    std::vector<EdgeSet> est;
    for (int k = 0; k < 10; ++k) {
      const double keep = (k + 1) / 11.0;
      EdgeSet e(15);
      for (int u = 0; u < 15; ++u)
        for (int v = u + 1; v < 15; ++v)
          if (rng.uniform() < keep) e.insert(u, v);
      lambdas.push_back(1.0 - keep);
      est.push_back(e);
    }
    total += roc_sweep(lambdas, est, truth).auc;
  }
  EXPECT_NEAR(total / 20.0, 0.5, 0.1);
}

TEST(Roc, DuplicatedGridPointsKeepArea) {
  const auto truth = edges(5, {{0, 1}, {2, 3}, {1, 4}});
  const std::vector<EdgeSet> est{edges(5, {{0, 1}}), edges(5, {{0, 1}, {0, 2}, {2, 3}}),
                                 edges(5, {{0, 1}, {0, 2}, {2, 3}, {3, 4}, {1, 4}})};
  const std::vector<double> lambdas{0.3, 0.2, 0.1};
  const double auc = roc_sweep(lambdas, est, truth).auc;
  std::vector<EdgeSet> doubled;
  std::vector<double> dl;
  for (std::size_t k = 0; k < 3; ++k) {
    doubled.push_back(est[k]);
    doubled.push_back(est[k]);
    dl.push_back(lambdas[k]);
    dl.push_back(lambdas[k]);
  }
  EXPECT_DOUBLE_EQ(roc_sweep(dl, doubled, truth).auc, auc);
}

TEST(Roc, SubjectCountsPooledBeforeRates) {
  // Subject 0: 1 of 1 true edge, subject 1: 0 of 3. Pooled TPR is 1/4.
  const std::vector<EdgeSet> truths{edges(4, {{0, 1}}), edges(4, {{0, 1}, {1, 2}, {2, 3}})};
  const std::vector<std::vector<EdgeSet>> est{{edges(4, {{0, 1}}), EdgeSet(4)}};
  const std::vector<double> lambdas{0.5};
  const auto roc = roc_sweep(lambdas, est, truths);
  bool found = false;
  for (const auto& pt : roc.points)
    if (pt.lambda == 0.5) {
      EXPECT_DOUBLE_EQ(pt.tpr, 0.25);
      EXPECT_DOUBLE_EQ(pt.fpr, 0.0);
      found = true;
    }
  EXPECT_TRUE(found);
}

TEST(Roc, ScoresRankingTruthFirstGivesUnitArea) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(4, 4);
  s(0, 1) = 0.9;
  s(2, 3) = 0.8;
  s(0, 2) = 0.3;
  s(1, 3) = 0.1;
  s = (s + s.transpose()).eval();
  EXPECT_DOUBLE_EQ(roc_from_scores(s, edges(4, {{0, 1}, {2, 3}})).auc, 1.0);
  EXPECT_DOUBLE_EQ(roc_from_scores(-s, edges(4, {{0, 1}, {2, 3}})).auc, 0.0);
}

TEST(Roc, AreaByTrapezoid) {
  const auto roc = make_roc({{0.5, 0.2, 0.6}, {0.1, 0.5, 0.9}});
  // Trapezoids on (0,0) (0.2,0.6) (0.5,0.9) (1,1).
  const double expect = 0.2 * 0.3 + 0.3 * 0.75 + 0.5 * 0.95;
  EXPECT_NEAR(roc.auc, expect, 1e-15);
}

TEST(Folds, ContiguousCover) {
  for (int n : {5, 10, 17, 100}) {
    for (int k : {2, 3, 5}) {
      int next = 0;
      for (int f = 0; f < k; ++f) {
        const auto [a, b] = fold_rows(n, k, f);
        EXPECT_EQ(a, next);
        EXPECT_GT(b, a);
        EXPECT_LE(b - a, (n + k - 1) / k);
        next = b;
      }
      EXPECT_EQ(next, n);
    }
  }
}

CohortData noise_cohort(std::uint64_t seed, int p = 5, int subjects = 3, int n = 60) {
  Rng rng(seed);
  std::vector<Eigen::MatrixXd> xs;
  for (int i = 0; i < subjects; ++i) xs.push_back(random_matrix(rng, n, p));
  return CohortData(NodeSet::numbered(static_cast<std::size_t>(p)), std::move(xs)).standardized();
}

std::vector<AlphaLambda> default_grid(const CohortData& data) {
  std::vector<AlphaLambda> grid;
  for (double l : log_grid(lambda_max(CohortGram::from(data)), 25, 0.01)) grid.push_back({0.25, l});
  return grid;
}

TEST(CrossValidate, PureNoisePrefersLargePenalties) {
  int top = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto data = noise_cohort(seed);
    const auto grid = default_grid(data);
    const auto rep = cross_validate(data, grid, 5, MnsConfig{});
    if (rep.best_index < grid.size() / 4) ++top;
  }
  EXPECT_GE(top, 8);
}

TEST(CrossValidate, NoiselessEdgePrefersSmallPenalties) {
  int bottom = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(50 + seed);
    std::vector<Eigen::MatrixXd> xs;
    for (int i = 0; i < 3; ++i) {
      Eigen::MatrixXd x(60, 2);
      x.col(0) = testing::random_vector(rng, 60);
      x.col(1) = 0.8 * x.col(0);
      xs.push_back(x);
    }
    const CohortData data(NodeSet::numbered(2), std::move(xs));
    const auto grid = default_grid(data.standardized());
    const auto rep = cross_validate(data.standardized(), grid, 5, MnsConfig{});
    if (rep.best_index >= grid.size() - grid.size() / 4) ++bottom;
  }
  EXPECT_GE(bottom, 8);
}

TEST(CrossValidate, LeaveOneOut) {
  const auto data = noise_cohort(3, 3, 2, 6);
  const auto grid = default_grid(data);
  const auto rep = cross_validate(data, std::span(grid).first(5), 6, MnsConfig{});
  EXPECT_EQ(rep.folds, 6);
  EXPECT_TRUE(rep.mse.allFinite());
  EXPECT_EQ(rep.fold_mse.rows(), 6);
}

TEST(CrossValidate, BestAttainsMinimum) {
  const auto data = noise_cohort(4);
  const auto grid = default_grid(data);
  const auto rep = cross_validate(data, grid, 4, MnsConfig{});
  EXPECT_EQ(rep.mse[static_cast<Eigen::Index>(rep.best_index)], rep.mse.minCoeff());
  EXPECT_EQ(rep.best.lambda, grid[rep.best_index].lambda);
  EXPECT_LT((rep.mse - rep.fold_mse.colwise().mean().transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CrossValidate, IndependentOfThreadCount) {
  SimConfig sim;
  sim.p = 8;
  sim.subjects = 3;
  sim.n = 50;
  sim.e_ran = 3;
  sim.seed = 5;
  const auto data = simulate_cohort(sim).data.standardized();
  const auto grid = default_grid(data);
  MnsConfig cfg;
  cfg.threads = 1;
  const auto a = cross_validate(data, grid, 5, cfg);
  cfg.threads = 3;
  const auto b = cross_validate(data, grid, 5, cfg);
  EXPECT_EQ(a.fold_mse, b.fold_mse);
  EXPECT_EQ(a.best_index, b.best_index);
}

TEST(CrossValidate, InvariantToSubjectOrder) {
  SimConfig sim;
  sim.p = 6;
  sim.subjects = 3;
  sim.n = 40;
  sim.e_ran = 2;
  sim.seed = 6;
  const auto data = simulate_cohort(sim).data.standardized();
  const CohortData flipped(data.nodes(), {data.subject(2), data.subject(0), data.subject(1)});
  const auto grid = default_grid(data);
  const auto a = cross_validate(data, std::span(grid).first(10), 4, MnsConfig{});
  const auto b = cross_validate(flipped, std::span(grid).first(10), 4, MnsConfig{});
  EXPECT_LT((a.mse - b.mse).cwiseAbs().maxCoeff(), 1e-8 * a.mse.maxCoeff());
  EXPECT_EQ(a.best_index, b.best_index);
}

TEST(CrossValidate, RejectsTooFewRows) {
  const auto data = noise_cohort(7, 3, 2, 4);
  const auto grid = default_grid(data);
  EXPECT_THROW(cross_validate(data, grid, 1, MnsConfig{}), DomainError);
  EXPECT_THROW(cross_validate(data, grid, 5, MnsConfig{}), DomainError);
}

TEST(MnsPath, OneResultPerGridPoint) {
  const auto data = noise_cohort(8);
  const auto gram = CohortGram::from(data);
  const auto lambdas = log_grid(lambda_max(gram), 6, 0.05);
  const auto path = mns_path(gram, 0.25, lambdas, MnsConfig{});
  ASSERT_EQ(path.size(), 6u);
  EXPECT_LE(path.front().population.size(), path.back().population.size());
  for (std::size_t k = 0; k < 6; ++k) {
    const auto [l1, l2] = to_penalties({0.25, lambdas[k]});
    EXPECT_EQ(path[k].config.lambda1, l1);
    EXPECT_EQ(path[k].config.lambda2, l2);
  }
}

}  // namespace
}  // namespace mns
