#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace corrl {

/// SplitMix64 finalizer. Stable across platforms; used for seed derivation.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed for sub-stream `stream` of a master seed (trial index, grid point, ...).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// Random source with fully specified output.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The conversions to doubles, normals and bounded integers are
/// implemented here rather than with the <random> distributions, whose
/// algorithms differ between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal (Marsaglia polar method).
  double normal();

  /// Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Inverse-CDF sampler over a finite probability vector.
class CategoricalSampler {
 public:
  explicit CategoricalSampler(std::span<const double> probs);
  std::size_t sample(Rng& rng) const;
  std::size_t size() const { return cdf_.size(); }

 private:
  std::vector<double> cdf_;
  std::size_t last_positive_ = 0;
};

/// Uniformly random permutation of 0..n-1 (Fisher-Yates).
std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng);

}  // namespace corrl
