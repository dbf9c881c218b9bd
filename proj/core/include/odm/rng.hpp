#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace odm {

// splitmix64 finalizer (Vigna). Used for seed derivation only, never as the
// sampling engine.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Stream k of a master seed: splitmix64(master + GOLDEN * (k+1)). Streams for
// distinct k are decorrelated and independent of how many streams exist, so
// ensemble members can run in parallel and still reproduce byte-identically.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master + 0x9E3779B97F4A7C15ULL * (stream + 1));
}

// Reproducible random source: std::mt19937_64 (bit-exact output sequence per
// the C++ standard) plus hand-rolled transforms with a documented draw
// discipline, so streams are stable across platforms and library versions:
//   uniform01  - 1 engine output, (x >> 11) * 2^-53, in [0,1)
//   normal     - exactly 2 engine outputs (Box-Muller, no caching)
//   poisson    - Knuth product below mean 10, Hormann PTRS above
//   binomial   - inversion below n*min(p,q) = 10, Hormann BTRS above
//   multinomial- sequential conditional binomials over categories in order
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t raw() { return eng_(); }

  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform on {0,...,n-1}, rejection from the top (no modulo bias).
  std::uint64_t uniform_below(std::uint64_t n);

  double normal();
  double normal(double mu, double sigma) { return mu + sigma * normal(); }

  long long poisson(double lambda);
  long long binomial(long long n, double p);

  // counts sized/overwritten to weights.size(); weights need not be normalized.
  void multinomial(long long n, const std::vector<double>& weights,
                   std::vector<long long>& counts);

 private:
  long long poisson_knuth(double lambda);
  long long poisson_ptrs(double lambda);
  long long binomial_inv(long long n, double p);
  long long binomial_btrs(long long n, double p);

  std::mt19937_64 eng_;
};

}  // namespace odm
