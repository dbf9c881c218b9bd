#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "odm/rng.hpp"

using odm::Rng;

TEST_CASE("uniform01 range and determinism") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(u == b.uniform01());
  }
}

TEST_CASE("derive_seed matches the splitmix64 construction and separates streams") {
  const std::uint64_t master = 123456789ULL;
  const std::uint64_t golden = 0x9E3779B97F4A7C15ULL;
  for (std::uint64_t k = 0; k < 4; ++k)
    CHECK(odm::derive_seed(master, k) == odm::splitmix64(master + golden * (k + 1)));
  CHECK(odm::derive_seed(master, 0) != odm::derive_seed(master, 1));
  CHECK(odm::derive_seed(master, 0) != odm::derive_seed(master + 1, 0));
}

TEST_CASE("normal consumes exactly two engine outputs, no caching") {
  Rng a(7), b(7);
  a.normal();
  b.raw();
  b.raw();
  for (int i = 0; i < 4; ++i) CHECK(a.raw() == b.raw());
}

TEST_CASE("normal moments") {
  Rng r(1);
  const int n = 100000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  CHECK(std::fabs(mean) < 0.02);
  CHECK(std::fabs(var - 1.0) < 0.03);
}

TEST_CASE("uniform_below stays in range and is deterministic") {
  Rng a(11), b(11);
  for (int i = 0; i < 2000; ++i) {
    const std::uint64_t v = a.uniform_below(7);
    CHECK(v < 7);
    CHECK(v == b.uniform_below(7));
  }
}

TEST_CASE("poisson means across both branches") {
  Rng r(3);
  const int n = 40000;
  for (const double lam : {0.5, 3.0, 9.5, 30.0, 200.0}) {
    long long s = 0;
    for (int i = 0; i < n; ++i) s += r.poisson(lam);
    const double mean = static_cast<double>(s) / n;
    const double se = std::sqrt(lam / n);
    CHECK(std::fabs(mean - lam) < 5.0 * se);
  }
}

TEST_CASE("binomial means across branches including the p > 1/2 flip") {
  Rng r(9);
  const int n = 40000;
  struct Case {
    long long trials;
    double p;
  };
  for (const Case c : {Case{20, 0.3}, Case{1000, 0.3}, Case{1000, 0.9}, Case{5, 0.5}}) {
    long long s = 0;
    for (int i = 0; i < n; ++i) {
      const long long k = r.binomial(c.trials, c.p);
      REQUIRE(k >= 0);
      REQUIRE(k <= c.trials);
      s += k;
    }
    const double mean = static_cast<double>(s) / n;
    const double expect = static_cast<double>(c.trials) * c.p;
    const double se = std::sqrt(static_cast<double>(c.trials) * c.p * (1 - c.p) / n);
    CHECK(std::fabs(mean - expect) < 5.0 * se + 1e-9);
  }
}

TEST_CASE("binomial degenerate p") {
  Rng r(4);
  CHECK(r.binomial(50, 0.0) == 0);
  CHECK(r.binomial(50, 1.0) == 50);
  CHECK(r.binomial(0, 0.3) == 0);
}

TEST_CASE("multinomial totals, zero-weight categories, and mean proportions") {
  Rng r(15);
  const std::vector<double> w = {1.0, 2.0, 0.0, 1.0};
  std::vector<long long> c;
  std::vector<double> sums(4, 0.0);
  const int reps = 4000;
  for (int i = 0; i < reps; ++i) {
    r.multinomial(100, w, c);
    long long tot = 0;
    for (std::size_t k = 0; k < c.size(); ++k) {
      REQUIRE(c[k] >= 0);
      tot += c[k];
      sums[k] += static_cast<double>(c[k]);
    }
    CHECK(tot == 100);
    CHECK(c[2] == 0);
  }
  CHECK(std::fabs(sums[0] / reps - 25.0) < 1.0);
  CHECK(std::fabs(sums[1] / reps - 50.0) < 1.0);
  CHECK(std::fabs(sums[3] / reps - 25.0) < 1.0);
}

TEST_CASE("multinomial rejects an all-zero weight vector with positive count") {
  Rng r(1);
  std::vector<long long> c;
  CHECK_THROWS_AS(r.multinomial(3, {0.0, 0.0}, c), std::invalid_argument);
  r.multinomial(0, {0.0, 0.0}, c);  // zero count is fine
  CHECK(c == std::vector<long long>{0, 0});
}
