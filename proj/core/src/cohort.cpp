#include "mns/cohort.hpp"

#include <cmath>

#include "mns/errors.hpp"

namespace mns {

CohortData::CohortData(NodeSet nodes, std::vector<Eigen::MatrixXd> subjects,
                       std::vector<std::string> subject_ids)
    : nodes_(std::move(nodes)), subjects_(std::move(subjects)), ids_(std::move(subject_ids)) {
  if (subjects_.empty()) throw DomainError("cohort has no subjects");
  if (ids_.empty()) {
    for (std::size_t i = 0; i < subjects_.size(); ++i) ids_.push_back("S" + std::to_string(i + 1));
  }
  if (ids_.size() != subjects_.size()) {
    throw DimensionError("cohort: " + std::to_string(ids_.size()) + " ids for " +
                         std::to_string(subjects_.size()) + " subjects");
  }
  const auto p = static_cast<Eigen::Index>(nodes_.size());
  for (std::size_t i = 0; i < subjects_.size(); ++i) {
    auto& x = subjects_[i];
    if (x.cols() != p) {
      throw DimensionError("subject " + ids_[i] + " has " + std::to_string(x.cols()) +
                           " columns, expected " + std::to_string(p));
    }
    if (x.rows() < 1) throw DomainError("subject " + ids_[i] + " has no observations");
    if (!x.allFinite()) throw NumericError("subject " + ids_[i] + " has non-finite entries");
    x.rowwise() -= x.colwise().mean();
  }
}

long CohortData::total_observations() const {
  long total = 0;
  for (const auto& x : subjects_) total += x.rows();
  return total;
}

int CohortData::min_observations() const {
  Eigen::Index m = subjects_.front().rows();
  for (const auto& x : subjects_) m = std::min(m, x.rows());
  return static_cast<int>(m);
}

Eigen::MatrixXd CohortData::pooled() const {
  Eigen::MatrixXd out(total_observations(), p());
  Eigen::Index row = 0;
  for (const auto& x : subjects_) {
    out.middleRows(row, x.rows()) = x;
    row += x.rows();
  }
  return out;
}

CohortData CohortData::standardized() const {
  Eigen::VectorXd ss = Eigen::VectorXd::Zero(p());
  for (const auto& x : subjects_) ss += x.colwise().squaredNorm().transpose();
  Eigen::VectorXd scale(p());
  const double total = static_cast<double>(total_observations());
  for (int j = 0; j < p(); ++j) {
    const double sd = std::sqrt(ss[j] / total);
    scale[j] = sd > 0 ? 1.0 / sd : 0.0;
  }
  CohortData out = *this;
  for (auto& x : out.subjects_) x = x * scale.asDiagonal();
  return out;
}

std::vector<std::vector<int>> CohortData::constant_columns() const {
  std::vector<std::vector<int>> out(subjects_.size());
  for (std::size_t i = 0; i < subjects_.size(); ++i) {
    for (int j = 0; j < p(); ++j) {
      if (subjects_[i].col(j).cwiseAbs().maxCoeff() == 0.0) out[i].push_back(j);
    }
  }
  return out;
}

CohortGram CohortGram::from(const CohortData& cohort) {
  CohortGram g;
  g.p = cohort.p();
  for (const auto& x : cohort.subjects()) {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(g.p, g.p);
    s.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
    g.gram.push_back(s.selfadjointView<Eigen::Lower>());
    g.n.push_back(static_cast<int>(x.rows()));
  }
  return g;
}

CohortGram CohortGram::from_rows(const CohortData& cohort,
                                 const std::vector<std::pair<int, int>>& rows) {
  if (rows.size() != cohort.num_subjects()) {
    throw DimensionError("row ranges must be given for every subject");
  }
  CohortGram g;
  g.p = cohort.p();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto [begin, end] = rows[i];
    const auto& x = cohort.subject(i);
    if (begin < 0 || end > x.rows() || begin > end) {
      throw DomainError("row range outside subject " + cohort.subject_ids()[i]);
    }
    const auto block = x.middleRows(begin, end - begin);
    g.gram.push_back(block.transpose() * block);
    g.n.push_back(end - begin);
  }
  return g;
}

long CohortGram::total_observations() const {
  long total = 0;
  for (int k : n) total += k;
  return total;
}

}  // namespace mns
