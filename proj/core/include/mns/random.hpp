#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace mns {

/// Seeded generator with a platform-independent output sequence.
///
/// std::mt19937_64 with in-house uniform and normal transforms. Independent
/// streams are derived from a master seed and a path of integer ids.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0);

  /// Stream keyed by (master, ids...). Distinct id paths give unrelated
  /// streams.
  static Rng stream(std::uint64_t master, std::initializer_list<std::uint64_t> ids);

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  bool coin() { return (engine_() >> 63) != 0; }
  /// Standard normal (Marsaglia polar method).
  double normal();

  /// k distinct indices from [0, n), in selection order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 finalizer, used for seed derivation.
std::uint64_t mix64(std::uint64_t x);

}  // namespace mns
