#pragma once

#include <compare>
#include <cstddef>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mns {

/// Ordered, uniquely labelled node set shared by every network of a cohort.
class NodeSet {
 public:
  NodeSet() = default;
  explicit NodeSet(std::vector<std::string> labels);

  /// Labels "V1".."Vp".
  static NodeSet numbered(std::size_t p);

  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::string& label(std::size_t i) const { return labels_.at(i); }
  /// Index of `label`, or size() when absent.
  std::size_t index_of(const std::string& label) const;

  friend bool operator==(const NodeSet&, const NodeSet&) = default;

 private:
  std::vector<std::string> labels_;
};

/// Undirected edge stored canonically with u < v.
struct Edge {
  int u = 0;
  int v = 0;

  Edge() = default;
  Edge(int a, int b);

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Undirected simple graph over p nodes.
class EdgeSet {
 public:
  EdgeSet() = default;
  explicit EdgeSet(int p);

  int p() const noexcept { return p_; }
  std::size_t size() const noexcept { return edges_.size(); }
  bool empty() const noexcept { return edges_.empty(); }
  std::size_t max_edges() const noexcept {
    return static_cast<std::size_t>(p_) * (p_ - 1) / 2;
  }

  /// Inserts (a,b); self-loops and out-of-range nodes throw DomainError.
  void insert(int a, int b);
  bool contains(int a, int b) const;
  void erase(int a, int b);

  auto begin() const { return edges_.begin(); }
  auto end() const { return edges_.end(); }

  std::vector<int> degrees() const;
  /// Boolean adjacency matrix.
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> adjacency() const;

  EdgeSet united(const EdgeSet& other) const;
  EdgeSet intersected(const EdgeSet& other) const;
  bool is_subset_of(const EdgeSet& other) const;
  /// Relabels node k as perm[k].
  EdgeSet permuted(std::span<const int> perm) const;

  friend bool operator==(const EdgeSet&, const EdgeSet&) = default;

 private:
  void check_pair(int a, int b) const;

  int p_ = 0;
  std::set<Edge> edges_;
};

/// Symmetric real matrix with exactly zero diagonal.
class WeightedNetwork {
 public:
  WeightedNetwork() = default;
  explicit WeightedNetwork(int p);
  /// Throws DomainError unless `weights` is square, symmetric and zero on the
  /// diagonal.
  explicit WeightedNetwork(Eigen::MatrixXd weights);

  int p() const noexcept { return static_cast<int>(weights_.rows()); }
  const Eigen::MatrixXd& weights() const noexcept { return weights_; }
  double operator()(int u, int v) const { return weights_(u, v); }
  void set(int u, int v, double w);

 private:
  Eigen::MatrixXd weights_;
};

/// Symmetric precision matrix.
class PrecisionMatrix {
 public:
  PrecisionMatrix() = default;
  explicit PrecisionMatrix(Eigen::MatrixXd theta);

  int p() const noexcept { return static_cast<int>(theta_.rows()); }
  const Eigen::MatrixXd& theta() const noexcept { return theta_; }
  /// Whether a Cholesky factorization succeeds.
  bool is_positive_definite() const;
  double min_eigenvalue() const;

 private:
  Eigen::MatrixXd theta_;
};

enum class Rule { And, Or };

Rule parse_rule(const std::string& text);
std::string to_string(Rule rule);

/// Symmetrizes per-node neighborhood supports. supports[v] lists the nodes
/// selected when regressing v on the others.
EdgeSet combine_neighborhoods(std::span<const std::vector<int>> supports,
                              Rule rule);

/// Average local clustering coefficient. Nodes of degree < 2 count as 0.
double clustering_coefficient(const EdgeSet& net);

/// Global transitivity: 3 x triangles / connected triples.
double transitivity(const EdgeSet& net);

EdgeSet support_of(const WeightedNetwork& net, double tol = 0.0);

/// Writes one "u<TAB>v<TAB>weight" row per edge in canonical order. Missing
/// weights are written as 1.
void write_edge_tsv(std::ostream& out, const NodeSet& nodes,
                    const EdgeSet& edges,
                    const WeightedNetwork* weights = nullptr);

/// Parses the format produced by write_edge_tsv. Unknown labels throw
/// ParseError; `source` names the input in messages.
EdgeSet read_edge_tsv(std::istream& in, const NodeSet& nodes,
                      const std::string& source = "<stream>");

}  // namespace mns
