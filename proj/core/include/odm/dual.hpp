#pragma once

#include <cmath>

namespace odm {

// Forward-mode scalar with two tangent slots — one per utility parameter
// (alpha, beta). Arithmetic propagates exact derivatives through the solver
// and intensity kernels, which are templated on the scalar type.
struct Dual2 {
  double v = 0.0;
  double d0 = 0.0;
  double d1 = 0.0;

  Dual2() = default;
  Dual2(double value) : v(value) {}  // constants carry zero tangent
  Dual2(double value, double t0, double t1) : v(value), d0(t0), d1(t1) {}

  Dual2& operator+=(const Dual2& o) {
    v += o.v;
    d0 += o.d0;
    d1 += o.d1;
    return *this;
  }
  Dual2& operator-=(const Dual2& o) {
    v -= o.v;
    d0 -= o.d0;
    d1 -= o.d1;
    return *this;
  }
};

inline Dual2 operator-(const Dual2& a) { return {-a.v, -a.d0, -a.d1}; }
inline Dual2 operator+(const Dual2& a, const Dual2& b) {
  return {a.v + b.v, a.d0 + b.d0, a.d1 + b.d1};
}
inline Dual2 operator-(const Dual2& a, const Dual2& b) {
  return {a.v - b.v, a.d0 - b.d0, a.d1 - b.d1};
}
inline Dual2 operator*(const Dual2& a, const Dual2& b) {
  return {a.v * b.v, a.d0 * b.v + a.v * b.d0, a.d1 * b.v + a.v * b.d1};
}
inline Dual2 operator/(const Dual2& a, const Dual2& b) {
  const double inv = 1.0 / b.v;
  const double q = a.v * inv;
  return {q, (a.d0 - q * b.d0) * inv, (a.d1 - q * b.d1) * inv};
}

inline bool operator<(const Dual2& a, const Dual2& b) { return a.v < b.v; }
inline bool operator>(const Dual2& a, const Dual2& b) { return a.v > b.v; }
inline bool operator<=(const Dual2& a, const Dual2& b) { return a.v <= b.v; }
inline bool operator>=(const Dual2& a, const Dual2& b) { return a.v >= b.v; }

inline Dual2 exp(const Dual2& a) {
  const double e = std::exp(a.v);
  return {e, e * a.d0, e * a.d1};
}
inline Dual2 log(const Dual2& a) {
  const double inv = 1.0 / a.v;
  return {std::log(a.v), a.d0 * inv, a.d1 * inv};
}
inline Dual2 sqrt(const Dual2& a) {
  const double s = std::sqrt(a.v);
  const double inv = 0.5 / s;
  return {s, a.d0 * inv, a.d1 * inv};
}
// |u| with subgradient 0 at u = 0.
inline Dual2 fabs(const Dual2& a) {
  if (a.v > 0.0) return a;
  if (a.v < 0.0) return -a;
  return {0.0, 0.0, 0.0};
}

inline double value_of(double x) { return x; }
inline double value_of(const Dual2& x) { return x.v; }

}  // namespace odm
