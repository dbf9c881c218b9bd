#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "odm/dual.hpp"
#include "odm/errors.hpp"

// Euler-Maruyama stepping of the log-attraction dynamics
//   dx_j = eps * (Lambda_+j - kappa e^{x_j} + delta) dt + sigma dB_j.
// Scalar-generic so Dual2 tangents ride through every step; the noise path is
// supplied by the caller and held fixed under differentiation.

namespace odm::detail {

// col_fn: x -> length-J vector of destination margins Lambda_+j at x.
// noise: tau*J standard normals, destination index fastest; may be null iff
// sigma == 0.
template <typename S, typename ColFn>
std::vector<S> hw_solve_k(std::vector<S> x, double eps, double kappa, double delta,
                          double sigma, double dt, int tau, ColFn col_fn,
                          const double* noise) {
  using std::exp;
  const std::size_t J = x.size();
  const double sdt = sigma * std::sqrt(dt);
  for (int t = 0; t < tau; ++t) {
    const std::vector<S> lam = col_fn(x);
    for (std::size_t j = 0; j < J; ++j) {
      const S drift = S(eps) * (lam[j] - S(kappa) * exp(x[j]) + S(delta));
      x[j] += drift * S(dt) + S(noise ? sdt * noise[static_cast<std::size_t>(t) * J + j]
                                      : 0.0);
      if (!std::isfinite(value_of(x[j])))
        throw NumericError("hw_solve: non-finite state at step " + std::to_string(t + 1) +
                           ", destination " + std::to_string(j + 1));
    }
  }
  return x;
}

}  // namespace odm::detail
