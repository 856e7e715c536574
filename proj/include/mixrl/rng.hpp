#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace mixrl {

// splitmix64, used to spread user seeds and derive independent substreams.
inline uint64_t splitmix64(uint64_t& x) {
  x += 0x9e3779b97f4a7c15ull;
  uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Deterministic substream id: same (seed, stream) always gives the same seed.
inline uint64_t derive_seed(uint64_t seed, uint64_t stream) {
  uint64_t s = seed ^ (0x9e3779b97f4a7c15ull * (stream + 1));
  return splitmix64(s);
}

// Thin wrapper over mt19937_64 with explicit, platform-stable draw helpers.
// std::uniform_*_distribution is implementation-defined, so all sampling in
// the library goes through these instead.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(splitmix64(seed)) {}
  Rng(uint64_t seed, uint64_t stream) : eng_(derive_seed(seed, stream)) {}

  uint64_t bits() { return eng_(); }

  // Uniform in [0, 1).
  double uniform() { return (eng_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n).
  int uniform_int(int n) { return static_cast<int>(uniform() * n); }
  long uniform_long(long n) { return static_cast<long>(uniform() * n); }

  bool bernoulli(double p) { return uniform() < p; }

  double normal() {
    // Box-Muller, fresh pair each call; throwaway half keeps state simple.
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  // Sample an index from an unnormalized weight row.
  int categorical(std::span<const double> w) {
    double total = 0.0;
    for (double v : w) total += v;
    double u = uniform() * total;
    double acc = 0.0;
    for (size_t i = 0; i < w.size(); ++i) {
      acc += w[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(w.size()) - 1;
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace mixrl
