#include <benchmark/benchmark.h>

#include "mns/glasso.hpp"
#include "mns/lasso.hpp"
#include "mns/random.hpp"
#include "mns/simulator.hpp"

namespace {

Eigen::MatrixXd gaussian(mns::Rng& rng, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = rng.normal();
  return m;
}

void BM_LassoDesign(benchmark::State& state) {
  const int q = static_cast<int>(state.range(0));
  mns::Rng rng(1);
  mns::LassoProblem prob;
  prob.design = gaussian(rng, 4 * q, q);
  prob.response = gaussian(rng, 4 * q, 1).col(0);
  prob.penalty_weights = Eigen::VectorXd::Constant(q, 0.1 * q);
  for (auto _ : state) benchmark::DoNotOptimize(mns::solve_lasso(prob));
}
BENCHMARK(BM_LassoDesign)->RangeMultiplier(2)->Range(8, 128);

void BM_LassoGram(benchmark::State& state) {
  const int q = static_cast<int>(state.range(0));
  mns::Rng rng(2);
  mns::LassoProblem prob;
  prob.design = gaussian(rng, 4 * q, q);
  prob.response = gaussian(rng, 4 * q, 1).col(0);
  prob.penalty_weights = Eigen::VectorXd::Constant(q, 0.1 * q);
  const auto gram = mns::GramLassoProblem::from(prob);
  for (auto _ : state) benchmark::DoNotOptimize(mns::solve_lasso_gram(gram));
}
BENCHMARK(BM_LassoGram)->RangeMultiplier(2)->Range(8, 128);

void BM_Glasso(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  mns::SimConfig cfg;
  cfg.p = p;
  cfg.subjects = 1;
  cfg.n = 200;
  cfg.e_ran = p / 2;
  const auto sim = mns::simulate_cohort(cfg);
  const Eigen::MatrixXd s = mns::sample_covariance(sim.data.subject(0));
  const double lambda = 0.2 * mns::glasso_lambda_max(s);
  for (auto _ : state) benchmark::DoNotOptimize(mns::solve_glasso({s, lambda}));
}
BENCHMARK(BM_Glasso)->Arg(20)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_GlassoPath(benchmark::State& state) {
  mns::SimConfig cfg;
  cfg.p = 50;
  cfg.subjects = 1;
  cfg.n = 200;
  const auto sim = mns::simulate_cohort(cfg);
  const Eigen::MatrixXd s = mns::sample_covariance(sim.data.subject(0));
  std::vector<double> grid;
  const double hi = mns::glasso_lambda_max(s);
  for (int k = 0; k < 25; ++k) grid.push_back(hi * std::pow(0.01, k / 24.0));
  for (auto _ : state) benchmark::DoNotOptimize(mns::glasso_path(s, grid));
}
BENCHMARK(BM_GlassoPath)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
