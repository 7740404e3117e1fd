#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mns/cohort.hpp"
#include "mns/estimator.hpp"
#include "mns/graph.hpp"

namespace mns {

/// Single-knob penalty: lambda1 = alpha * lambda, lambda2 = sqrt(2) (1 - alpha) lambda.
struct AlphaLambda {
  double alpha = 0.25;
  double lambda = 0.0;

  void validate() const;
};

std::pair<double, double> to_penalties(const AlphaLambda& al);
/// Inverse of to_penalties for lambda > 0.
AlphaLambda from_penalties(double lambda1, double lambda2);

/// `count` log-spaced values from hi down to lo_ratio * hi.
std::vector<double> log_grid(double hi, std::size_t count, double lo_ratio = 0.01);

struct Confusion {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;

  Confusion& operator+=(const Confusion& other);
};

Confusion confusion(const EdgeSet& estimated, const EdgeSet& truth);

struct Rates {
  double tpr = 0.0;
  double fpr = 0.0;
  /// Truth had no edges; tpr reported as 1.
  bool empty_truth = false;
  /// Truth was complete; fpr reported as 0.
  bool full_truth = false;
};

Rates rates(const Confusion& c);
Rates tpr_fpr(const EdgeSet& estimated, const EdgeSet& truth);

struct RocPoint {
  double lambda = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

/// Points sorted by (fpr, tpr), anchored at (0,0) and (1,1); trapezoid AUC.
struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.0;
};

RocCurve make_roc(std::vector<RocPoint> points);

/// One estimate per grid point against a single truth.
RocCurve roc_sweep(std::span<const double> lambdas, std::span<const EdgeSet> estimates,
                   const EdgeSet& truth);

/// estimates[k][i] is subject i's estimate at grid point k. Confusion counts
/// are pooled over subjects before rates are taken.
RocCurve roc_sweep(std::span<const double> lambdas,
                   std::span<const std::vector<EdgeSet>> estimates,
                   std::span<const EdgeSet> truths);

/// ROC of an edge score matrix (upper triangle) thresholded at every
/// distinct value. The lambda field holds the threshold.
RocCurve roc_from_scores(const Eigen::MatrixXd& scores, const EdgeSet& truth);

/// Fits MNS at every grid point with a fixed alpha.
std::vector<MnsResult> mns_path(const CohortGram& cohort, double alpha,
                                std::span<const double> lambdas, const MnsConfig& base);

struct CvReport {
  std::vector<AlphaLambda> grid;
  /// Row k, column g: mean held-out squared error of fold k at grid point g.
  Eigen::MatrixXd fold_mse;
  /// Mean over folds, per grid point.
  Eigen::VectorXd mse;
  std::size_t best_index = 0;
  AlphaLambda best;
  int folds = 0;
};

/// Half-open row range [first, second) of fold k when n rows are cut into K
/// contiguous blocks.
std::pair<int, int> fold_rows(int n, int folds, int k);

/// K-fold cross-validation with contiguous within-subject time blocks. Each
/// held-out row of subject i at node v is predicted from the training fit as
/// x(beta + sigma o b_i); the error is averaged over nodes, rows and folds.
CvReport cross_validate(const CohortData& cohort, std::span<const AlphaLambda> grid, int folds,
                        const MnsConfig& base);

}  // namespace mns
