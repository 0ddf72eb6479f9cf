#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace rinst {

/// Seedable, splittable random stream.
///
/// Every stochastic routine takes an explicit Rng (or a seed from which one is
/// built). Child streams derived with split() are statistically independent
/// of the parent and of each other, so work fanned out across threads stays
/// reproducible regardless of scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  /// Derive an independent child stream keyed by `stream`. Does not advance
  /// this generator.
  Rng split(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }

  double normal();
  double normal(double mean, double stddev);
  double uniform();  // [0, 1)
  double uniform(double lo, double hi);
  std::size_t index(std::size_t n);  // uniform in [0, n)

  /// k distinct indices from [0, n), uniformly without replacement, sorted.
  std::vector<std::size_t> sample_without_replacement(std::size_t n,
                                                      std::size_t k);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace rinst
