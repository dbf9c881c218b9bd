#include "odm/rng.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace odm {

std::uint64_t Rng::uniform_below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_below: n == 0");
  const std::uint64_t min = (-n) % n;  // 2^64 mod n
  for (;;) {
    std::uint64_t x = eng_();
    if (x >= min) return x % n;
  }
}

double Rng::normal() {
  // u1 in (0,1] so the log is finite; u2 in [0,1). Two outputs, always.
  const double u1 = 1.0 - uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

long long Rng::poisson(double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("poisson: lambda < 0");
  if (lambda == 0.0) return 0;
  return lambda < 10.0 ? poisson_knuth(lambda) : poisson_ptrs(lambda);
}

long long Rng::poisson_knuth(double lambda) {
  const double limit = std::exp(-lambda);
  long long k = 0;
  double prod = uniform01();
  while (prod > limit) {
    ++k;
    prod *= uniform01();
  }
  return k;
}

// Hormann (1993), transformed rejection with squeeze, valid for lambda >= 10.
long long Rng::poisson_ptrs(double lambda) {
  const double slam = std::sqrt(lambda);
  const double loglam = std::log(lambda);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = uniform01() - 0.5;
    double v = uniform01();
    const double us = 0.5 - std::fabs(u);
    const double kf = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<long long>(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    const double lhs = std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b);
    const double rhs = kf * loglam - lambda - std::lgamma(kf + 1.0);
    if (lhs <= rhs) return static_cast<long long>(kf);
  }
}

long long Rng::binomial(long long n, double p) {
  if (n < 0 || !(p >= 0.0) || !(p <= 1.0))
    throw std::invalid_argument("binomial: bad arguments");
  if (n == 0 || p == 0.0) return 0;
  if (p == 1.0) return n;
  const bool flip = p > 0.5;
  const double q = flip ? 1.0 - p : p;
  const long long k = static_cast<double>(n) * q < 10.0 ? binomial_inv(n, q)
                                                        : binomial_btrs(n, q);
  return flip ? n - k : k;
}

// Sequential search from 0; requires n*p modest so q^n stays representable.
long long Rng::binomial_inv(long long n, double p) {
  const double q = 1.0 - p;
  const double s = p / q;
  const double a = (static_cast<double>(n) + 1.0) * s;
  double r = std::pow(q, static_cast<double>(n));
  double u = uniform01();
  long long x = 0;
  while (u > r) {
    u -= r;
    ++x;
    if (x > n) {  // guard against fp leakage in the tail
      x = n;
      break;
    }
    r *= (a / static_cast<double>(x) - s);
  }
  return x;
}

// Hormann (1993) BTRS, valid for n*min(p,1-p) >= 10; caller ensures p <= 0.5.
long long Rng::binomial_btrs(long long n, double p) {
  const double nd = static_cast<double>(n);
  const double q = 1.0 - p;
  const double spq = std::sqrt(nd * p * q);
  const double b = 1.15 + 2.53 * spq;
  const double a = -0.0873 + 0.0248 * b + 0.01 * p;
  const double c = nd * p + 0.5;
  const double vr = 0.92 - 4.2 / b;
  const double alpha = (2.83 + 5.1 / b) * spq;
  const double lpq = std::log(p / q);
  const double m = std::floor((nd + 1.0) * p);
  const double h = std::lgamma(m + 1.0) + std::lgamma(nd - m + 1.0);
  for (;;) {
    const double u = uniform01() - 0.5;
    double v = uniform01();
    const double us = 0.5 - std::fabs(u);
    const double kf = std::floor((2.0 * a / us + b) * u + c);
    if (kf < 0.0 || kf > nd) continue;
    if (us >= 0.07 && v <= vr) return static_cast<long long>(kf);
    v = std::log(v * alpha / (a / (us * us) + b));
    if (v <= h - std::lgamma(kf + 1.0) - std::lgamma(nd - kf + 1.0) + (kf - m) * lpq)
      return static_cast<long long>(kf);
  }
}

void Rng::multinomial(long long n, const std::vector<double>& weights,
                      std::vector<long long>& counts) {
  const std::size_t k = weights.size();
  counts.assign(k, 0);
  if (k == 0) {
    if (n != 0) throw std::invalid_argument("multinomial: no categories");
    return;
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("multinomial: negative weight");
    total += w;
  }
  if (!(total > 0.0)) {
    if (n != 0) throw std::invalid_argument("multinomial: zero total weight");
    return;
  }
  long long left = n;
  double wleft = total;
  for (std::size_t j = 0; j + 1 < k && left > 0; ++j) {
    const double pj = weights[j] >= wleft ? 1.0 : weights[j] / wleft;
    const long long c = binomial(left, pj < 0.0 ? 0.0 : (pj > 1.0 ? 1.0 : pj));
    counts[j] = c;
    left -= c;
    wleft -= weights[j];
    if (wleft <= 0.0 && left > 0) {  // fp cancellation: dump rest in next slot
      counts[j + 1] += left;
      left = 0;
    }
  }
  if (left > 0) counts[k - 1] += left;
}

}  // namespace odm
