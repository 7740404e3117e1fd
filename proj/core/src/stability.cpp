#include "mns/stability.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mns/errors.hpp"
#include "mns/log.hpp"
#include "mns/parallel.hpp"
#include "mns/tuning.hpp"

namespace mns {
namespace {

constexpr std::uint64_t kStarsStream = 0x5354415253ULL;
constexpr std::uint64_t kBootstrapStream = 0x424f4f54ULL;

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& data, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), data.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = data.row(static_cast<Eigen::Index>(rows[k]));
  return out;
}

void add_support(Eigen::MatrixXd& counts, const EdgeSet& edges) {
  for (const auto& e : edges) {
    counts(e.u, e.v) += 1.0;
    counts(e.v, e.u) += 1.0;
  }
}

}  // namespace

void StabilityConfig::validate() const {
  if (B < 2) throw DomainError("stability needs B >= 2");
  if (!(c >= 0)) throw DomainError("stability needs c >= 0");
  if (!(stars_beta > 0 && stars_beta < 0.5)) throw DomainError("stars_beta must lie in (0, 0.5)");
  if (stars_subsamples < 1) throw DomainError("stars_subsamples must be >= 1");
  if (stars_grid < 2) throw DomainError("stars_grid must be >= 2");
}

int stars_subsample_size(int n) {
  if (n > 144) return static_cast<int>(std::floor(10.0 * std::sqrt(static_cast<double>(n))));
  return static_cast<int>(std::floor(0.8 * n));
}

StarsResult stars_select_lambda(const Eigen::MatrixXd& data, const StabilityConfig& cfg, Rng& rng) {
  cfg.validate();
  const int n = static_cast<int>(data.rows());
  const int p = static_cast<int>(data.cols());
  if (n < 20) throw DomainError("StARS needs n >= 20 observations");
  const double top = glasso_lambda_max(sample_covariance(data));
  StarsResult res;
  if (!(top > 0)) {
    res.grid = {0.0};
    res.instability = {0.0};
    return res;
  }
  res.grid = log_grid(top, static_cast<std::size_t>(cfg.stars_grid), 0.01);
  const std::size_t G = res.grid.size();
  const int m = stars_subsample_size(n);

  std::vector<Eigen::MatrixXd> counts(G, Eigen::MatrixXd::Zero(p, p));
  for (int s = 0; s < cfg.stars_subsamples; ++s) {
    const auto rows = rng.sample_without_replacement(static_cast<std::size_t>(n), static_cast<std::size_t>(m));
    const auto path = glasso_path(sample_covariance(rows_of(data, rows)), res.grid, cfg.glasso);
    for (std::size_t g = 0; g < G; ++g) add_support(counts[g], path[g]);
  }

  const double pairs = 0.5 * p * (p - 1);
  res.instability.resize(G);
  for (std::size_t g = 0; g < G; ++g) {
    double total = 0.0;
    for (int u = 0; u < p; ++u) {
      for (int v = u + 1; v < p; ++v) {
        const double theta = counts[g](u, v) / cfg.stars_subsamples;
        total += 2.0 * theta * (1.0 - theta);
      }
    }
    res.instability[g] = pairs > 0 ? total / pairs : 0.0;
  }

  double running = 0.0;
  res.index = 0;
  res.crossed = false;
  for (std::size_t g = 0; g < G; ++g) {
    running = std::max(running, res.instability[g]);
    if (running > cfg.stars_beta) {
      res.crossed = true;
      break;
    }
    res.index = g;
  }
  if (!res.crossed) warn("StARS: instability never exceeded the threshold; using the smallest penalty");
  res.lambda = res.grid[res.index];
  return res;
}

RandomPenalty randomized_penalty_matrix(int p, double lambda, double lambda_max, double c, Rng& rng) {
  if (!(c >= 0)) throw DomainError("randomization amplitude c must be >= 0");
  RandomPenalty out;
  out.matrix = Eigen::MatrixXd::Zero(p, p);
  for (int j = 0; j < p; ++j) {
    for (int k = j + 1; k < p; ++k) {
      double value = lambda + c * lambda_max * (rng.coin() ? 1.0 : -1.0);
      if (value < 0) {
        value = 0.0;
        out.clamped = true;
      }
      out.matrix(j, k) = value;
      out.matrix(k, j) = value;
    }
  }
  return out;
}

BootstrapResult bootstrap_networks(const Eigen::MatrixXd& data, double lambda, double lambda_max,
                                   const StabilityConfig& cfg, std::uint64_t stream_tag) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(data.rows());
  const int p = static_cast<int>(data.cols());
  if (n < 2) throw DomainError("bootstrap needs n >= 2");

  struct Replicate {
    EdgeSet edges;
    bool ok = false;
    bool clamped = false;
  };
  std::vector<Replicate> reps(static_cast<std::size_t>(cfg.B));
  parallel_for(reps.size(), cfg.threads, [&](std::size_t b) {
    Rng rng = Rng::stream(cfg.seed, {kBootstrapStream, stream_tag, b});
    std::vector<std::size_t> rows(n);
    for (auto& r : rows) r = static_cast<std::size_t>(rng.below(n));
    auto penalty = randomized_penalty_matrix(p, lambda, lambda_max, cfg.c, rng);
    reps[b].clamped = penalty.clamped;
    try {
      GlassoProblem prob{sample_covariance(rows_of(data, rows)), std::move(penalty.matrix)};
      reps[b].edges = solve_glasso(prob, cfg.glasso).support();
      reps[b].ok = true;
    } catch (const NumericError&) {
      reps[b].ok = false;
    }
  });

  BootstrapResult out;
  out.frequency = Eigen::MatrixXd::Zero(p, p);
  for (const auto& rep : reps) {
    if (rep.clamped) ++out.clamped_draws;
    if (!rep.ok) {
      ++out.failures;
      continue;
    }
    ++out.effective_B;
    add_support(out.frequency, rep.edges);
  }
  if (out.effective_B > 0) out.frequency /= out.effective_B;
  if (out.failures > 0) {
    warn("bootstrap: " + std::to_string(out.failures) + " of " + std::to_string(cfg.B) +
         " replicates failed and were skipped");
  }
  return out;
}

BetaBinomialMoments beta_binomial_moments(std::span<const Eigen::MatrixXd> frequencies, int B) {
  const auto N = frequencies.size();
  if (N < 2) throw DomainError("Beta-Binomial moments need N >= 2 subjects");
  if (B < 2) throw DomainError("Beta-Binomial moments need B >= 2");
  const auto p = frequencies.front().rows();
  for (const auto& y : frequencies) {
    if (y.rows() != p || y.cols() != p) throw DimensionError("frequency matrices differ in shape");
  }
  BetaBinomialMoments m;
  m.mu = Eigen::MatrixXd::Zero(p, p);
  for (const auto& y : frequencies) m.mu += y;
  m.mu /= static_cast<double>(N);
  m.rho = Eigen::MatrixXd::Zero(p, p);
  m.rho_raw = Eigen::MatrixXd::Zero(p, p);
  m.degenerate.setConstant(p, p, false);
  const double b = static_cast<double>(B);
  for (Eigen::Index j = 0; j < p; ++j) {
    m.mu(j, j) = 0.0;
    for (Eigen::Index k = 0; k < p; ++k) {
      if (j == k) continue;
      const double mu = m.mu(j, k);
      if (mu <= 0.0 || mu >= 1.0) {
        m.degenerate(j, k) = true;
        m.rho_raw(j, k) = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      double ss = 0.0;
      for (const auto& y : frequencies) ss += (mu - y(j, k)) * (mu - y(j, k));
      const double raw = b / (b - 1.0) * ss / (mu * (1.0 - mu) * static_cast<double>(N - 1)) - 1.0 / (b - 1.0);
      m.rho_raw(j, k) = raw;
      m.rho(j, k) = std::clamp(raw, 0.0, 1.0);
    }
  }
  return m;
}

StabilityResult run_stability(const CohortData& cohort, const StabilityConfig& cfg) {
  cfg.validate();
  const auto N = cohort.num_subjects();
  StabilityResult res;
  res.lambdas.resize(N);
  res.lambda_max.resize(N);
  res.effective_B.resize(N);
  res.stars_crossed.resize(N);
  res.per_subject_freq.resize(N);

  StabilityConfig inner = cfg;
  for (std::size_t i = 0; i < N; ++i) {
    const auto& x = cohort.subject(i);
    Rng stars_rng = Rng::stream(cfg.seed, {kStarsStream, i});
    const auto stars = stars_select_lambda(x, cfg, stars_rng);
    res.lambdas[i] = stars.lambda;
    res.lambda_max[i] = glasso_lambda_max(sample_covariance(x));
    res.stars_crossed[i] = stars.crossed;
    auto boot = bootstrap_networks(x, stars.lambda, res.lambda_max[i], inner, i);
    if (boot.effective_B < 2) throw NumericError("subject " + cohort.subject_ids()[i] + ": fewer than 2 bootstrap fits succeeded");
    res.effective_B[i] = boot.effective_B;
    res.clamped_draws += boot.clamped_draws;
    res.per_subject_freq[i] = std::move(boot.frequency);
  }
  if (res.clamped_draws > 0) {
    warn("stability: " + std::to_string(res.clamped_draws) +
         " randomized penalty draws had negative entries clamped to 0");
  }
  const int b_min = *std::min_element(res.effective_B.begin(), res.effective_B.end());
  auto moments = beta_binomial_moments(res.per_subject_freq, b_min);
  res.mu_pop = std::move(moments.mu);
  res.rho_pop = std::move(moments.rho);
  res.rho_raw = std::move(moments.rho_raw);
  res.degenerate = std::move(moments.degenerate);
  return res;
}

EdgeSet threshold_scores(const Eigen::MatrixXd& scores, double threshold) {
  const int p = static_cast<int>(scores.rows());
  EdgeSet out(p);
  for (int u = 0; u < p; ++u) {
    for (int v = u + 1; v < p; ++v) {
      if (scores(u, v) > threshold) out.insert(u, v);
    }
  }
  return out;
}

}  // namespace mns
