#include <benchmark/benchmark.h>

#include "mns/estimator.hpp"
#include "mns/simulator.hpp"
#include "mns/stability.hpp"
#include "mns/tuning.hpp"

namespace {

mns::CohortData cohort(int p, int subjects, int n) {
  mns::SimConfig cfg;
  cfg.p = p;
  cfg.subjects = subjects;
  cfg.n = n;
  cfg.e_ran = p / 2;
  cfg.seed = 11;
  return mns::simulate_cohort(cfg).data.standardized();
}

void BM_EStep(benchmark::State& state) {
  const int q = static_cast<int>(state.range(0));
  const auto data = cohort(q + 1, 1, 200);
  const Eigen::MatrixXd x = data.subject(0).rightCols(q);
  const Eigen::VectorXd y = data.subject(0).col(0);
  const Eigen::VectorXd beta = Eigen::VectorXd::Constant(q, 0.01);
  const Eigen::VectorXd sigma = Eigen::VectorXd::Constant(q, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(mns::e_step(x, y, beta, sigma));
}
BENCHMARK(BM_EStep)->Arg(19)->Arg(49)->Arg(99);

void BM_FitNode(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  const auto gram = mns::CohortGram::from(cohort(p, 10, 200));
  mns::MnsConfig cfg;
  cfg.lambda1 = cfg.lambda2 = 0.1 * mns::lambda_max(gram);
  for (auto _ : state) benchmark::DoNotOptimize(mns::fit_node(gram, 0, cfg));
}
BENCHMARK(BM_FitNode)->Arg(20)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_MnsPath(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  const auto gram = mns::CohortGram::from(cohort(p, 10, 200));
  const auto grid = mns::log_grid(mns::lambda_max(gram), 25, 0.01);
  mns::MnsConfig base;
  base.threads = 0;
  for (auto _ : state) benchmark::DoNotOptimize(mns::mns_path(gram, 0.25, grid, base));
}
BENCHMARK(BM_MnsPath)->Arg(20)->Arg(50)->Unit(benchmark::kMillisecond)->Iterations(1);

void BM_Bootstrap(benchmark::State& state) {
  const auto data = cohort(20, 1, 200);
  const Eigen::MatrixXd& x = data.subject(0);
  const double lmax = mns::glasso_lambda_max(mns::sample_covariance(x));
  mns::StabilityConfig cfg;
  cfg.B = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(mns::bootstrap_networks(x, 0.3 * lmax, lmax, cfg, 0));
}
BENCHMARK(BM_Bootstrap)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
