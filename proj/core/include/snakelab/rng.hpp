#pragma once

#include <cstdint>
#include <random>

namespace snakelab {

// One diffusion round of the splitmix64 sequence; advances x.
inline std::uint64_t splitmix64_next(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic stream of random variates. All variate algorithms are
// implemented here (never std::*_distribution) so that a (seed, stream) pair
// yields the same byte stream on every platform and standard library.
//
// Streams derived from the same seed but different stream ids are
// independent for practical purposes (seed and id are diffused through
// splitmix64 before seeding the engine).
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) { reseed(seed, stream); }

  void reseed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t x = seed;
    (void)splitmix64_next(x);
    x ^= 0xd2b74407b1ce6e93ULL + stream * 0x9e3779b97f4a7c15ULL;
    std::uint64_t s = splitmix64_next(x);
    s ^= splitmix64_next(x);
    eng_.seed(s);
    has_spare_ = false;
    spare_ = 0.0;
  }

  std::uint64_t u64() { return eng_(); }

  // Uniform on [0,1), 53 random bits.
  double uniform01() { return double(u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0,1]; safe as a log() argument.
  double uniform_pos() { return 1.0 - uniform01(); }

  // Uniform on {0,...,n-1}, unbiased (rejection on the top range).
  std::uint64_t below(std::uint64_t n);

  // Uniform on {lo,...,hi} inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return lo + std::int64_t(below(std::uint64_t(hi - lo + 1)));
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Standard normal (Marsaglia polar, one spare cached).
  double normal();

  // Exponential(1).
  double exponential();

  // Poisson with the given mean (inversion; intended for small means).
  std::int64_t poisson(double mean);

  // Geometric on {0,1,...} with success probability 1/2: P(k) = 2^{-k-1}.
  std::int64_t geometric_half();

 private:
  std::mt19937_64 eng_{0};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace snakelab
