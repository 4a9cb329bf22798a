#include "fct/core/rng.hpp"

#include <cmath>
#include <numbers>

namespace fct {

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) return 0;
  // Rejection keeps the result unbiased.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t v = next_u64();
  while (v >= limit) v = next_u64();
  return v % n;
}

double Rng::normal() {
  double u1 = uniform();
  const double u2 = uniform();
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

RealTensor Rng::normal_tensor(const Shape& shape, double stddev) {
  RealTensor t(shape);
  for (auto& v : t.data()) v = stddev * normal();
  return t;
}

RealTensor Rng::uniform_tensor(const Shape& shape, double lo, double hi) {
  RealTensor t(shape);
  for (auto& v : t.data()) v = uniform(lo, hi);
  return t;
}

}  // namespace fct
