#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mns/graph.hpp"

namespace mns {

/// Replicated multivariate time series: one n_i x p matrix per subject over a
/// shared node set. Entries are finite and columns are centered.
class CohortData {
 public:
  CohortData() = default;

  /// Validates shapes and finiteness, then centers every column of every
  /// subject. Subject ids default to "S1".."SN".
  CohortData(NodeSet nodes, std::vector<Eigen::MatrixXd> subjects,
             std::vector<std::string> subject_ids = {});

  const NodeSet& nodes() const noexcept { return nodes_; }
  int p() const noexcept { return static_cast<int>(nodes_.size()); }
  std::size_t num_subjects() const noexcept { return subjects_.size(); }
  const Eigen::MatrixXd& subject(std::size_t i) const { return subjects_.at(i); }
  const std::vector<Eigen::MatrixXd>& subjects() const noexcept { return subjects_; }
  const std::vector<std::string>& subject_ids() const noexcept { return ids_; }
  long total_observations() const;
  int min_observations() const;

  /// All subjects stacked row-wise (still centered per subject).
  Eigen::MatrixXd pooled() const;

  /// Copy with every column scaled to unit pooled standard deviation.
  /// Zero-variance columns are left at zero.
  CohortData standardized() const;

  /// Columns that are identically zero after centering, per subject.
  std::vector<std::vector<int>> constant_columns() const;

 private:
  NodeSet nodes_;
  std::vector<Eigen::MatrixXd> subjects_;
  std::vector<std::string> ids_;
};

/// Per-subject sufficient statistics X_i'X_i and row counts. Everything the
/// estimator needs is a function of these.
struct CohortGram {
  int p = 0;
  std::vector<Eigen::MatrixXd> gram;
  std::vector<int> n;

  static CohortGram from(const CohortData& cohort);
  /// Gram of rows [begin, end) of every subject.
  static CohortGram from_rows(const CohortData& cohort,
                              const std::vector<std::pair<int, int>>& rows);

  std::size_t num_subjects() const noexcept { return gram.size(); }
  long total_observations() const;
};

}  // namespace mns
