#include "mns/graph.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "mns/errors.hpp"

namespace mns {

NodeSet::NodeSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.size() < 2) {
    throw DomainError("node set needs at least 2 nodes");
  }
  std::unordered_set<std::string> seen;
  for (const auto& l : labels_) {
    if (!seen.insert(l).second) {
      throw DomainError("duplicate node label '" + l + "'");
    }
  }
}

NodeSet NodeSet::numbered(std::size_t p) {
  std::vector<std::string> labels;
  labels.reserve(p);
  for (std::size_t i = 0; i < p; ++i) {
    labels.push_back("V" + std::to_string(i + 1));
  }
  return NodeSet(std::move(labels));
}

std::size_t NodeSet::index_of(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  return static_cast<std::size_t>(it - labels_.begin());
}

Edge::Edge(int a, int b) : u(std::min(a, b)), v(std::max(a, b)) {}

EdgeSet::EdgeSet(int p) : p_(p) {
  if (p < 0) throw DomainError("negative node count");
}

void EdgeSet::check_pair(int a, int b) const {
  if (a == b) throw DomainError("self-loop (" + std::to_string(a) + ")");
  if (a < 0 || b < 0 || a >= p_ || b >= p_) {
    throw DomainError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                      ") outside node range p=" + std::to_string(p_));
  }
}

void EdgeSet::insert(int a, int b) {
  check_pair(a, b);
  edges_.emplace(a, b);
}

bool EdgeSet::contains(int a, int b) const {
  if (a == b) return false;
  return edges_.contains(Edge(a, b));
}

void EdgeSet::erase(int a, int b) { edges_.erase(Edge(a, b)); }

std::vector<int> EdgeSet::degrees() const {
  std::vector<int> deg(p_, 0);
  for (const auto& e : edges_) {
    ++deg[e.u];
    ++deg[e.v];
  }
  return deg;
}

Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> EdgeSet::adjacency() const {
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> a(p_, p_);
  a.setConstant(false);
  for (const auto& e : edges_) {
    a(e.u, e.v) = true;
    a(e.v, e.u) = true;
  }
  return a;
}

EdgeSet EdgeSet::united(const EdgeSet& other) const {
  if (other.p_ != p_) throw DimensionError("edge sets over different p");
  EdgeSet out = *this;
  out.edges_.insert(other.edges_.begin(), other.edges_.end());
  return out;
}

EdgeSet EdgeSet::intersected(const EdgeSet& other) const {
  if (other.p_ != p_) throw DimensionError("edge sets over different p");
  EdgeSet out(p_);
  for (const auto& e : edges_) {
    if (other.edges_.contains(e)) out.edges_.insert(e);
  }
  return out;
}

bool EdgeSet::is_subset_of(const EdgeSet& other) const {
  if (other.p_ != p_) throw DimensionError("edge sets over different p");
  return std::all_of(edges_.begin(), edges_.end(),
                     [&](const Edge& e) { return other.edges_.contains(e); });
}

EdgeSet EdgeSet::permuted(std::span<const int> perm) const {
  if (static_cast<int>(perm.size()) != p_) {
    throw DimensionError("permutation length differs from p");
  }
  EdgeSet out(p_);
  for (const auto& e : edges_) out.insert(perm[e.u], perm[e.v]);
  return out;
}

WeightedNetwork::WeightedNetwork(int p) : weights_(Eigen::MatrixXd::Zero(p, p)) {}

WeightedNetwork::WeightedNetwork(Eigen::MatrixXd weights)
    : weights_(std::move(weights)) {
  if (weights_.rows() != weights_.cols()) {
    throw DimensionError("weighted network matrix is not square");
  }
  for (Eigen::Index i = 0; i < weights_.rows(); ++i) {
    if (weights_(i, i) != 0.0) {
      throw DomainError("weighted network has nonzero diagonal");
    }
    for (Eigen::Index j = i + 1; j < weights_.cols(); ++j) {
      if (weights_(i, j) != weights_(j, i)) {
        throw DomainError("weighted network is not symmetric");
      }
    }
  }
}

void WeightedNetwork::set(int u, int v, double w) {
  if (u == v) throw DomainError("weighted network diagonal is fixed at 0");
  weights_(u, v) = w;
  weights_(v, u) = w;
}

PrecisionMatrix::PrecisionMatrix(Eigen::MatrixXd theta) : theta_(std::move(theta)) {
  if (theta_.rows() != theta_.cols()) {
    throw DimensionError("precision matrix is not square");
  }
  const double scale = std::max(1.0, theta_.cwiseAbs().maxCoeff());
  if ((theta_ - theta_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw DomainError("precision matrix is not symmetric");
  }
}

bool PrecisionMatrix::is_positive_definite() const {
  Eigen::LLT<Eigen::MatrixXd> llt(theta_);
  return llt.info() == Eigen::Success;
}

double PrecisionMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(theta_,
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Rule parse_rule(const std::string& text) {
  if (text == "and" || text == "AND") return Rule::And;
  if (text == "or" || text == "OR") return Rule::Or;
  throw DomainError("unknown rule '" + text + "' (expected and|or)");
}

std::string to_string(Rule rule) { return rule == Rule::And ? "and" : "or"; }

EdgeSet combine_neighborhoods(std::span<const std::vector<int>> supports,
                              Rule rule) {
  const int p = static_cast<int>(supports.size());
  std::vector<std::vector<char>> selected(p, std::vector<char>(p, 0));
  for (int v = 0; v < p; ++v) {
    for (int u : supports[v]) {
      if (u < 0 || u >= p) {
        throw DimensionError("support of node " + std::to_string(v) +
                             " references node " + std::to_string(u) +
                             " outside p=" + std::to_string(p));
      }
      if (u == v) {
        throw DomainError("support of node " + std::to_string(v) +
                          " contains itself");
      }
      selected[v][u] = 1;
    }
  }
  EdgeSet out(p);
  for (int u = 0; u < p; ++u) {
    for (int v = u + 1; v < p; ++v) {
      const bool keep = rule == Rule::And ? (selected[u][v] && selected[v][u])
                                          : (selected[u][v] || selected[v][u]);
      if (keep) out.insert(u, v);
    }
  }
  return out;
}

double clustering_coefficient(const EdgeSet& net) {
  const int p = net.p();
  if (p < 3) throw DomainError("clustering coefficient needs p >= 3");
  const auto adj = net.adjacency();
  std::vector<std::vector<int>> nbrs(p);
  for (const auto& e : net) {
    nbrs[e.u].push_back(e.v);
    nbrs[e.v].push_back(e.u);
  }
  double total = 0.0;
  for (int v = 0; v < p; ++v) {
    const auto& nb = nbrs[v];
    const std::size_t k = nb.size();
    if (k < 2) continue;
    std::size_t closed = 0;
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a + 1; b < k; ++b) {
        if (adj(nb[a], nb[b])) ++closed;
      }
    }
    total += static_cast<double>(closed) / (static_cast<double>(k * (k - 1)) / 2.0);
  }
  return total / p;
}

double transitivity(const EdgeSet& net) {
  if (net.p() < 3) throw DomainError("transitivity needs p >= 3");
  const auto adj = net.adjacency();
  const auto deg = net.degrees();
  double triples = 0.0;
  for (int d : deg) triples += 0.5 * d * (d - 1);
  if (triples == 0.0) return 0.0;
  double triangles = 0.0;
  for (const auto& e : net) {
    for (int w = e.v + 1; w < net.p(); ++w) {
      if (adj(e.u, w) && adj(e.v, w)) triangles += 1.0;
    }
  }
  return 3.0 * triangles / triples;
}

EdgeSet support_of(const WeightedNetwork& net, double tol) {
  if (tol < 0) throw DomainError("support tolerance must be >= 0");
  const int p = net.p();
  EdgeSet out(p);
  for (int u = 0; u < p; ++u) {
    for (int v = u + 1; v < p; ++v) {
      if (std::abs(net(u, v)) > tol) out.insert(u, v);
    }
  }
  return out;
}

void write_edge_tsv(std::ostream& out, const NodeSet& nodes,
                    const EdgeSet& edges, const WeightedNetwork* weights) {
  if (static_cast<int>(nodes.size()) != edges.p()) {
    throw DimensionError("node set and edge set disagree on p");
  }
  if (weights != nullptr && weights->p() != edges.p()) {
    throw DimensionError("weights and edge set disagree on p");
  }
  std::ostringstream buf;
  buf.precision(17);
  for (const auto& e : edges) {
    const double w = weights ? (*weights)(e.u, e.v) : 1.0;
    buf << nodes.label(e.u) << '\t' << nodes.label(e.v) << '\t' << w << '\n';
  }
  out << buf.str();
}

EdgeSet read_edge_tsv(std::istream& in, const NodeSet& nodes,
                      const std::string& source) {
  EdgeSet out(static_cast<int>(nodes.size()));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string a, b, w;
    if (!std::getline(fields, a, '\t') || !std::getline(fields, b, '\t')) {
      throw ParseError(source, lineno, 0, "expected at least two tab-separated labels");
    }
    const auto ia = nodes.index_of(a);
    const auto ib = nodes.index_of(b);
    if (ia == nodes.size()) throw ParseError(source, lineno, 1, "unknown node '" + a + "'");
    if (ib == nodes.size()) throw ParseError(source, lineno, 2, "unknown node '" + b + "'");
    if (ia == ib) throw ParseError(source, lineno, 2, "self-loop on '" + a + "'");
    out.insert(static_cast<int>(ia), static_cast<int>(ib));
  }
  return out;
}

}  // namespace mns
