#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace offenv {

/// Derives an independent 64-bit stream seed from a master seed and a stream id
/// (SplitMix64 finalizer). Used wherever work is sharded.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// Seeded random source. Uniform draws are built from raw engine bits so that
/// sampled datasets are bit-identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard exponential variate.
  double exponential();

  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Inverse-CDF sampler over a finite support. Zero-probability outcomes are
/// never returned.
class CategoricalSampler {
 public:
  CategoricalSampler() = default;
  explicit CategoricalSampler(std::span<const double> probs);

  int sample(Rng& rng) const;
  std::size_t size() const { return cdf_.size(); }

 private:
  std::vector<double> cdf_;
};

}  // namespace offenv
