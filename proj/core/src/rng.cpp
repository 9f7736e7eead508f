#include "snakelab/rng.hpp"

#include <bit>
#include <cmath>

namespace snakelab {

std::uint64_t Rng::below(std::uint64_t n) {
  // Lemire-style rejection: accept u64 values below the largest multiple of n.
  const std::uint64_t limit = ~std::uint64_t(0) - (~std::uint64_t(0) % n + 1) % n;
  std::uint64_t v;
  do {
    v = u64();
  } while (v > limit);
  return v % n;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform01() - 1.0;
    v = 2.0 * uniform01() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

double Rng::exponential() { return -std::log(uniform_pos()); }

std::int64_t Rng::poisson(double mean) {
  // Inversion by sequential search; fine for the small means used here.
  double p = std::exp(-mean);
  double cum = p;
  const double u = uniform01();
  std::int64_t k = 0;
  while (u > cum) {
    ++k;
    p *= mean / double(k);
    cum += p;
    if (p == 0.0) break;  // u in the far tail; clamp
  }
  return k;
}

std::int64_t Rng::geometric_half() {
  // Count leading heads in fair-coin words: trailing one-bits of u64 draws.
  std::int64_t k = 0;
  for (;;) {
    const std::uint64_t w = u64();
    const int ones = std::countr_one(w);
    k += ones;
    if (ones < 64) return k;
  }
}

}  // namespace snakelab
