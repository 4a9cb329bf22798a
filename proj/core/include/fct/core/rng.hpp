#pragma once

#include <cstdint>

#include "fct/core/tensor.hpp"

namespace fct {

// Counter-based generator: draw i is splitmix64(seed_key + i * gamma). The
// stream depends only on the seed and the draw index, so it is identical on
// every platform. Distributions are computed here rather than through
// <random> because the standard distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}

  std::uint64_t next_u64() { return mix(key_ + (counter_++) * kGamma); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  // Standard normal via Box-Muller; consumes two draws.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  RealTensor normal_tensor(const Shape& shape, double stddev = 1.0);
  RealTensor uniform_tensor(const Shape& shape, double lo, double hi);

  // Independent stream keyed by (this stream's key, id); does not advance this one.
  Rng fork(std::uint64_t id) const { return Rng(key_ ^ mix(id + 0x9e3779b97f4a7c15ULL), 0); }

  std::uint64_t draws() const noexcept { return counter_; }

 private:
  Rng(std::uint64_t key, int) : key_(mix(key)) {}

  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z += kGamma;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace fct
