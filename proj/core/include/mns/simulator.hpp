#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mns/cohort.hpp"
#include "mns/graph.hpp"
#include "mns/random.hpp"

namespace mns {

struct SimConfig {
  int p = 50;
  int subjects = 10;
  /// Observations per subject.
  int n = 200;
  /// Number of variable edges.
  int e_ran = 20;
  /// Per-subject inclusion probability of each variable edge.
  double tau = 1.0;
  /// Connectivity strength: weights have magnitude in [r/2, r].
  double r = 1.0;
  /// Preferential-attachment edges per arriving node.
  int ba_m = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Ground truth of a simulated cohort.
struct SimTruth {
  EdgeSet e_pop;
  EdgeSet e_tilde;
  /// Variable edges present in each subject; each is a subset of e_tilde.
  std::vector<EdgeSet> e_subject;
  WeightedNetwork theta_pop;
  std::vector<WeightedNetwork> theta_subject;
  /// Repaired precision per subject.
  std::vector<PrecisionMatrix> precisions;

  /// e_pop ∪ e_subject[i]: the full network of subject i.
  EdgeSet subject_network(std::size_t i) const { return e_pop.united(e_subject.at(i)); }
};

struct SimCohort {
  SimTruth truth;
  CohortData data;
};

/// Preferential attachment: a complete seed graph on ba_m + 1 nodes, then each
/// arriving node links to ba_m distinct existing nodes chosen with probability
/// proportional to degree.
EdgeSet gen_barabasi_albert(int p, int ba_m, Rng& rng);

/// Exactly e_ran distinct pairs drawn uniformly.
EdgeSet gen_erdos_renyi(int p, int e_ran, Rng& rng);

/// Magnitude Uniform[r/2, r] with a fair random sign, per edge.
WeightedNetwork sample_edge_weights(const EdgeSet& edges, double r, Rng& rng);

/// Off-diagonals of a unit-diagonal matrix divided by s times their row's
/// absolute off-diagonal sum (s starts at 1.1), then symmetrized by averaging
/// with the transpose. s grows by 0.1 until the result is positive definite.
PrecisionMatrix pd_repair(const Eigen::MatrixXd& theta, double safety = 1.1, int max_retries = 50);

/// n independent rows from N(0, precision^{-1}).
Eigen::MatrixXd sample_mvn(const PrecisionMatrix& precision, int n, Rng& rng);

/// Population/variable-edge cohort networks (no data).
SimTruth gen_cohort(const SimConfig& cfg);

/// Networks plus one n x p sample per subject. Subject i samples from the
/// stream (seed, i), so the data does not depend on generation order.
SimCohort simulate_cohort(const SimConfig& cfg);

/// Ten disjoint scale-free components of p/10 nodes. Components 0-7 are in
/// every subject, component 8 in subjects 0 and 1, component 9 in subject 0
/// only. Requires p divisible by 10 and at least 3 subjects.
SimTruth gen_component_cohort(int p, Rng& rng, int subjects = 3, int ba_m = 1, double r = 1.0);

/// Component cohort with n observations per subject.
SimCohort simulate_component_cohort(int p, int n, std::uint64_t seed, int subjects = 3);

}  // namespace mns
