#include "offenv/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace offenv {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::exponential() {
  // 1 - u lies in (0, 1], so the log is finite.
  return -std::log(1.0 - uniform());
}

CategoricalSampler::CategoricalSampler(std::span<const double> probs) {
  cdf_.reserve(probs.size());
  double acc = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw std::invalid_argument("CategoricalSampler: negative probability");
    acc += p;
    cdf_.push_back(acc);
  }
  if (cdf_.empty() || acc <= 0.0) throw std::invalid_argument("CategoricalSampler: no mass");
}

int CategoricalSampler::sample(Rng& rng) const {
  const double x = rng.uniform() * cdf_.back();
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), x);
  if (it == cdf_.end()) --it;
  // Skip trailing zero-mass entries that share the final cdf value.
  auto idx = static_cast<int>(it - cdf_.begin());
  while (idx > 0 && cdf_[idx] == cdf_[idx - 1]) --idx;
  return idx;
}

}  // namespace offenv
