#include "mns/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mns/errors.hpp"

namespace mns {

void SimConfig::validate() const {
  if (p < 2) throw DomainError("simulation needs p >= 2");
  if (subjects < 1) throw DomainError("simulation needs at least one subject");
  if (n < 1) throw DomainError("simulation needs n >= 1");
  if (e_ran < 0 || static_cast<long>(e_ran) > static_cast<long>(p) * (p - 1) / 2) {
    throw DomainError("e_ran must lie in [0, p(p-1)/2]");
  }
  if (!(tau >= 0.0 && tau <= 1.0)) throw DomainError("tau must lie in [0, 1]");
  if (!(r > 0.0)) throw DomainError("connectivity strength r must be > 0");
  if (ba_m < 1 || ba_m >= p) throw DomainError("ba_m must lie in [1, p)");
}

EdgeSet gen_barabasi_albert(int p, int ba_m, Rng& rng) {
  if (ba_m < 1 || ba_m >= p) throw DomainError("preferential attachment needs 1 <= ba_m < p");
  EdgeSet g(p);
  // Each edge contributes both endpoints, so a uniform draw from this list is
  // a degree-proportional draw over nodes.
  std::vector<int> endpoints;
  for (int a = 0; a <= ba_m; ++a) {
    for (int b = a + 1; b <= ba_m; ++b) {
      g.insert(a, b);
      endpoints.push_back(a);
      endpoints.push_back(b);
    }
  }
  std::vector<int> targets;
  for (int t = ba_m + 1; t < p; ++t) {
    targets.clear();
    while (static_cast<int>(targets.size()) < ba_m) {
      const int cand = endpoints[rng.below(endpoints.size())];
      if (std::find(targets.begin(), targets.end(), cand) == targets.end()) {
        targets.push_back(cand);
      }
    }
    for (int u : targets) {
      g.insert(u, t);
      endpoints.push_back(u);
      endpoints.push_back(t);
    }
  }
  return g;
}

EdgeSet gen_erdos_renyi(int p, int e_ran, Rng& rng) {
  const std::size_t pairs = static_cast<std::size_t>(p) * (p - 1) / 2;
  if (e_ran < 0 || static_cast<std::size_t>(e_ran) > pairs) {
    throw DomainError("e_ran must lie in [0, p(p-1)/2]");
  }
  EdgeSet g(p);
  for (std::size_t k : rng.sample_without_replacement(pairs, static_cast<std::size_t>(e_ran))) {
    // Unrank k into the (u, v) pair of the row-major upper triangle.
    int u = 0;
    std::size_t row = static_cast<std::size_t>(p - 1);
    while (k >= row) {
      k -= row;
      ++u;
      --row;
    }
    g.insert(u, u + 1 + static_cast<int>(k));
  }
  return g;
}

WeightedNetwork sample_edge_weights(const EdgeSet& edges, double r, Rng& rng) {
  if (!(r > 0)) throw DomainError("connectivity strength r must be > 0");
  WeightedNetwork w(edges.p());
  for (const auto& e : edges) {
    const double magnitude = rng.uniform(0.5 * r, r);
    w.set(e.u, e.v, rng.coin() ? magnitude : -magnitude);
  }
  return w;
}

PrecisionMatrix pd_repair(const Eigen::MatrixXd& theta, double safety, int max_retries) {
  const auto p = theta.rows();
  if (theta.cols() != p) throw DimensionError("pd_repair: matrix is not square");
  if (!theta.allFinite()) throw NumericError("pd_repair: non-finite input");
  for (Eigen::Index i = 0; i < p; ++i) {
    if (std::abs(theta(i, i) - 1.0) > 1e-12) throw DomainError("pd_repair: diagonal must be 1");
  }
  Eigen::VectorXd row_sums(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    row_sums[i] = theta.row(i).cwiseAbs().sum() - std::abs(theta(i, i));
  }
  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    const double s = safety + 0.1 * attempt;
    Eigen::MatrixXd scaled = theta;
    for (Eigen::Index i = 0; i < p; ++i) {
      if (row_sums[i] == 0.0) continue;
      for (Eigen::Index j = 0; j < p; ++j) {
        if (j != i) scaled(i, j) /= s * row_sums[i];
      }
    }
    Eigen::MatrixXd sym = 0.5 * (scaled + scaled.transpose());
    sym.diagonal().setOnes();
    PrecisionMatrix out(std::move(sym));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.theta(), Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() > 0 && out.is_positive_definite()) return out;
  }
  throw NumericError("pd_repair: no positive definite rescaling found");
}

Eigen::MatrixXd sample_mvn(const PrecisionMatrix& precision, int n, Rng& rng) {
  if (n < 0) throw DomainError("sample_mvn: negative sample size");
  Eigen::LLT<Eigen::MatrixXd> llt(precision.theta());
  if (llt.info() != Eigen::Success) throw NumericError("sample_mvn: precision is not positive definite");
  const int p = precision.p();
  Eigen::MatrixXd z(p, n);
  for (int row = 0; row < n; ++row) {
    for (int j = 0; j < p; ++j) z(j, row) = rng.normal();
  }
  // Theta = L L', so x = L'^{-1} z has covariance Theta^{-1}.
  Eigen::MatrixXd x = llt.matrixU().solve(z);
  return x.transpose();
}

namespace {

PrecisionMatrix repaired_sum(const WeightedNetwork& a, const WeightedNetwork& b) {
  Eigen::MatrixXd theta = a.weights() + b.weights();
  theta.diagonal().setOnes();
  return pd_repair(theta);
}

}  // namespace

SimTruth gen_cohort(const SimConfig& cfg) {
  cfg.validate();
  SimTruth t;
  Rng pop_rng = Rng::stream(cfg.seed, {0});
  t.e_pop = gen_barabasi_albert(cfg.p, cfg.ba_m, pop_rng);
  t.theta_pop = sample_edge_weights(t.e_pop, cfg.r, pop_rng);
  Rng var_rng = Rng::stream(cfg.seed, {1});
  t.e_tilde = gen_erdos_renyi(cfg.p, cfg.e_ran, var_rng);
  for (int i = 0; i < cfg.subjects; ++i) {
    Rng rng = Rng::stream(cfg.seed, {2, static_cast<std::uint64_t>(i)});
    EdgeSet mine(cfg.p);
    for (const auto& e : t.e_tilde) {
      // Always consume the draw so tau does not shift later weights.
      const double u = rng.uniform();
      if (u < cfg.tau) mine.insert(e.u, e.v);
    }
    auto weights = sample_edge_weights(mine, cfg.r, rng);
    t.precisions.push_back(repaired_sum(t.theta_pop, weights));
    t.e_subject.push_back(std::move(mine));
    t.theta_subject.push_back(std::move(weights));
  }
  return t;
}

SimCohort simulate_cohort(const SimConfig& cfg) {
  SimCohort out{gen_cohort(cfg), {}};
  std::vector<Eigen::MatrixXd> data;
  for (int i = 0; i < cfg.subjects; ++i) {
    Rng rng = Rng::stream(cfg.seed, {3, static_cast<std::uint64_t>(i)});
    data.push_back(sample_mvn(out.truth.precisions[static_cast<std::size_t>(i)], cfg.n, rng));
  }
  out.data = CohortData(NodeSet::numbered(static_cast<std::size_t>(cfg.p)), std::move(data));
  return out;
}

SimTruth gen_component_cohort(int p, Rng& rng, int subjects, int ba_m, double r) {
  if (p <= 0 || p % 10 != 0) throw DomainError("component cohort needs p divisible by 10");
  if (subjects < 3) throw DomainError("component cohort needs at least 3 subjects");
  const int block = p / 10;
  if (ba_m >= block) throw DomainError("ba_m must be smaller than the component size");

  std::vector<EdgeSet> comps;
  std::vector<WeightedNetwork> comp_weights;
  for (int c = 0; c < 10; ++c) {
    const EdgeSet local = gen_barabasi_albert(block, ba_m, rng);
    EdgeSet global(p);
    for (const auto& e : local) global.insert(e.u + c * block, e.v + c * block);
    comp_weights.push_back(sample_edge_weights(global, r, rng));
    comps.push_back(std::move(global));
  }

  SimTruth t;
  t.e_pop = EdgeSet(p);
  t.e_tilde = EdgeSet(p);
  t.theta_pop = WeightedNetwork(p);
  for (int c = 0; c < 10; ++c) {
    auto& target = c < 8 ? t.e_pop : t.e_tilde;
    target = target.united(comps[c]);
  }
  for (int c = 0; c < 8; ++c) {
    for (const auto& e : comps[c]) t.theta_pop.set(e.u, e.v, comp_weights[c](e.u, e.v));
  }
  for (int i = 0; i < subjects; ++i) {
    EdgeSet mine(p);
    WeightedNetwork w(p);
    auto add = [&](int c) {
      mine = mine.united(comps[c]);
      for (const auto& e : comps[c]) w.set(e.u, e.v, comp_weights[c](e.u, e.v));
    };
    if (i <= 1) add(8);
    if (i == 0) add(9);
    t.precisions.push_back(repaired_sum(t.theta_pop, w));
    t.e_subject.push_back(std::move(mine));
    t.theta_subject.push_back(std::move(w));
  }
  return t;
}

SimCohort simulate_component_cohort(int p, int n, std::uint64_t seed, int subjects) {
  Rng net_rng = Rng::stream(seed, {0});
  SimCohort out{gen_component_cohort(p, net_rng, subjects), {}};
  std::vector<Eigen::MatrixXd> data;
  for (int i = 0; i < subjects; ++i) {
    Rng rng = Rng::stream(seed, {3, static_cast<std::uint64_t>(i)});
    data.push_back(sample_mvn(out.truth.precisions[static_cast<std::size_t>(i)], n, rng));
  }
  out.data = CohortData(NodeSet::numbered(static_cast<std::size_t>(p)), std::move(data));
  return out;
}

}  // namespace mns
