#include "mns/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mns/errors.hpp"
#include "mns/parallel.hpp"

namespace mns {

void AlphaLambda::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in [0, 1]");
  if (!(lambda >= 0.0)) throw DomainError("lambda must be >= 0");
}

std::pair<double, double> to_penalties(const AlphaLambda& al) {
  al.validate();
  return {al.alpha * al.lambda, std::numbers::sqrt2 * (1.0 - al.alpha) * al.lambda};
}

AlphaLambda from_penalties(double lambda1, double lambda2) {
  if (!(lambda1 >= 0) || !(lambda2 >= 0)) throw DomainError("penalties must be >= 0");
  const double lambda = lambda1 + lambda2 / std::numbers::sqrt2;
  if (lambda == 0.0) return {0.0, 0.0};
  return {lambda1 / lambda, lambda};
}

std::vector<double> log_grid(double hi, std::size_t count, double lo_ratio) {
  if (!(hi > 0)) throw DomainError("grid upper end must be > 0");
  if (!(lo_ratio > 0 && lo_ratio <= 1)) throw DomainError("grid ratio must lie in (0, 1]");
  if (count == 0) throw DomainError("grid needs at least one point");
  std::vector<double> grid(count);
  if (count == 1) {
    grid[0] = hi;
    return grid;
  }
  const double step = std::log(lo_ratio) / static_cast<double>(count - 1);
  for (std::size_t k = 0; k < count; ++k) grid[k] = hi * std::exp(step * static_cast<double>(k));
  return grid;
}

Confusion& Confusion::operator+=(const Confusion& other) {
  true_positives += other.true_positives;
  false_positives += other.false_positives;
  positives += other.positives;
  negatives += other.negatives;
  return *this;
}

Confusion confusion(const EdgeSet& estimated, const EdgeSet& truth) {
  if (estimated.p() != truth.p()) {
    throw DimensionError("estimate has p=" + std::to_string(estimated.p()) + " but truth has p=" +
                         std::to_string(truth.p()));
  }
  Confusion c;
  c.positives = truth.size();
  c.negatives = truth.max_edges() - truth.size();
  for (const auto& e : estimated) {
    if (truth.contains(e.u, e.v)) {
      ++c.true_positives;
    } else {
      ++c.false_positives;
    }
  }
  return c;
}

Rates rates(const Confusion& c) {
  Rates r;
  if (c.positives == 0) {
    r.tpr = 1.0;
    r.empty_truth = true;
  } else {
    r.tpr = static_cast<double>(c.true_positives) / static_cast<double>(c.positives);
  }
  if (c.negatives == 0) {
    r.fpr = 0.0;
    r.full_truth = true;
  } else {
    r.fpr = static_cast<double>(c.false_positives) / static_cast<double>(c.negatives);
  }
  return r;
}

Rates tpr_fpr(const EdgeSet& estimated, const EdgeSet& truth) {
  return rates(confusion(estimated, truth));
}

RocCurve make_roc(std::vector<RocPoint> points) {
  points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  points.push_back({0.0, 1.0, 1.0});
  std::stable_sort(points.begin(), points.end(), [](const RocPoint& a, const RocPoint& b) {
    return a.fpr < b.fpr || (a.fpr == b.fpr && a.tpr < b.tpr);
  });
  RocCurve roc;
  for (std::size_t k = 1; k < points.size(); ++k) {
    roc.auc += 0.5 * (points[k].fpr - points[k - 1].fpr) * (points[k].tpr + points[k - 1].tpr);
  }
  roc.points = std::move(points);
  return roc;
}

RocCurve roc_sweep(std::span<const double> lambdas, std::span<const EdgeSet> estimates,
                   const EdgeSet& truth) {
  if (lambdas.size() != estimates.size()) throw DimensionError("roc_sweep: grid and estimates differ in length");
  if (lambdas.empty()) throw DomainError("roc_sweep: empty grid");
  std::vector<RocPoint> pts;
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    const auto r = tpr_fpr(estimates[k], truth);
    pts.push_back({lambdas[k], r.fpr, r.tpr});
  }
  return make_roc(std::move(pts));
}

RocCurve roc_sweep(std::span<const double> lambdas,
                   std::span<const std::vector<EdgeSet>> estimates,
                   std::span<const EdgeSet> truths) {
  if (lambdas.size() != estimates.size()) throw DimensionError("roc_sweep: grid and estimates differ in length");
  if (lambdas.empty()) throw DomainError("roc_sweep: empty grid");
  std::vector<RocPoint> pts;
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    if (estimates[k].size() != truths.size()) throw DimensionError("roc_sweep: one estimate per subject");
    Confusion pooled;
    for (std::size_t i = 0; i < truths.size(); ++i) pooled += confusion(estimates[k][i], truths[i]);
    const auto r = rates(pooled);
    pts.push_back({lambdas[k], r.fpr, r.tpr});
  }
  return make_roc(std::move(pts));
}

RocCurve roc_from_scores(const Eigen::MatrixXd& scores, const EdgeSet& truth) {
  const int p = truth.p();
  if (scores.rows() != p || scores.cols() != p) throw DimensionError("roc_from_scores: score matrix shape differs from p");
  struct Scored {
    double score;
    bool positive;
  };
  std::vector<Scored> all;
  for (int u = 0; u < p; ++u) {
    for (int v = u + 1; v < p; ++v) all.push_back({scores(u, v), truth.contains(u, v)});
  }
  std::sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) { return a.score > b.score; });
  const double pos = static_cast<double>(truth.size());
  const double neg = static_cast<double>(truth.max_edges() - truth.size());
  std::vector<RocPoint> pts;
  double tp = 0, fp = 0;
  for (std::size_t k = 0; k < all.size();) {
    const double thr = all[k].score;
    while (k < all.size() && all[k].score == thr) {
      (all[k].positive ? tp : fp) += 1.0;
      ++k;
    }
    pts.push_back({thr, neg > 0 ? fp / neg : 0.0, pos > 0 ? tp / pos : 1.0});
  }
  return make_roc(std::move(pts));
}

std::vector<MnsResult> mns_path(const CohortGram& cohort, double alpha,
                                std::span<const double> lambdas, const MnsConfig& base) {
  std::vector<MnsResult> out;
  out.reserve(lambdas.size());
  for (double lambda : lambdas) {
    MnsConfig cfg = base;
    std::tie(cfg.lambda1, cfg.lambda2) = to_penalties({alpha, lambda});
    out.push_back(fit_all(cohort, cfg));
  }
  return out;
}

std::pair<int, int> fold_rows(int n, int folds, int k) {
  const auto begin = static_cast<int>(static_cast<long>(k) * n / folds);
  const auto end = static_cast<int>(static_cast<long>(k + 1) * n / folds);
  return {begin, end};
}

CvReport cross_validate(const CohortData& cohort, std::span<const AlphaLambda> grid, int folds,
                        const MnsConfig& base) {
  if (folds < 2) throw DomainError("cross-validation needs K >= 2 folds");
  if (grid.empty()) throw DomainError("cross-validation grid is empty");
  for (const auto& g : grid) g.validate();
  for (std::size_t i = 0; i < cohort.num_subjects(); ++i) {
    if (cohort.subject(i).rows() < folds) {
      throw DomainError("subject " + cohort.subject_ids()[i] + " has " +
                        std::to_string(cohort.subject(i).rows()) + " observations, fewer than K=" +
                        std::to_string(folds));
    }
    if (cohort.subject(i).rows() - (cohort.subject(i).rows() + folds - 1) / folds < 2) {
      throw DomainError("subject " + cohort.subject_ids()[i] +
                        " keeps fewer than 2 training rows in some fold");
    }
  }
  const int p = cohort.p();
  const CohortGram full = CohortGram::from(cohort);

  struct Split {
    CohortGram train;
    CohortGram test;
  };
  std::vector<Split> splits;
  for (int k = 0; k < folds; ++k) {
    std::vector<std::pair<int, int>> rows;
    for (const auto& x : cohort.subjects()) rows.push_back(fold_rows(static_cast<int>(x.rows()), folds, k));
    Split s{full, CohortGram::from_rows(cohort, rows)};
    for (std::size_t i = 0; i < full.num_subjects(); ++i) {
      s.train.gram[i] -= s.test.gram[i];
      s.train.n[i] -= s.test.n[i];
    }
    splits.push_back(std::move(s));
  }

  CvReport report;
  report.grid.assign(grid.begin(), grid.end());
  report.folds = folds;
  report.fold_mse = Eigen::MatrixXd::Zero(folds, static_cast<Eigen::Index>(grid.size()));

  const std::size_t units = static_cast<std::size_t>(folds) * grid.size();
  MnsConfig inner = base;
  inner.threads = 1;
  parallel_for(units, base.threads, [&](std::size_t unit) {
    const auto k = static_cast<int>(unit / grid.size());
    const auto g = unit % grid.size();
    MnsConfig cfg = inner;
    std::tie(cfg.lambda1, cfg.lambda2) = to_penalties(grid[g]);
    const auto& split = splits[static_cast<std::size_t>(k)];
    const MnsResult fit = fit_all(split.train, cfg);
    double sse = 0.0;
    for (int v = 0; v < p; ++v) {
      const auto& nf = fit.node_fits[static_cast<std::size_t>(v)];
      const NodeStats test = NodeStats::from(split.test, v);
      for (std::size_t i = 0; i < test.num_subjects(); ++i) {
        const Eigen::VectorXd b = nf.blups.row(static_cast<Eigen::Index>(i)).transpose();
        sse += subject_rss(test, i, nf.beta, nf.sigma_re, b);
      }
    }
    report.fold_mse(k, static_cast<Eigen::Index>(g)) =
        sse / (static_cast<double>(p) * static_cast<double>(split.test.total_observations()));
  });

  report.mse = report.fold_mse.colwise().mean().transpose();
  if (!report.mse.allFinite()) throw NumericError("cross-validation produced non-finite error");
  Eigen::Index best = 0;
  report.mse.minCoeff(&best);
  report.best_index = static_cast<std::size_t>(best);
  report.best = report.grid[report.best_index];
  return report;
}

}  // namespace mns
