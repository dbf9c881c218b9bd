#pragma once

#include <cmath>
#include <vector>

#include "odm/dual.hpp"
#include "odm/grid.hpp"
#include "odm/table.hpp"

// Scalar-generic intensity and drift kernels. Instantiated with double for
// plain evaluation and with Dual2 for derivative propagation. Normalizations
// subtract the max utility (as a plain constant — it cancels analytically, so
// tangents stay exact) before exponentiating.

namespace odm::detail {

// utilities v_ij = o_i + alpha x_j - beta c_ij
template <typename S>
void fill_utilities(const std::vector<S>& x, const S& alpha, const S& beta,
                    const std::vector<double>* offsets, const Cost& C, Grid<S>& v) {
  const std::size_t I = C.rows(), J = C.cols();
  for (std::size_t i = 0; i < I; ++i) {
    const double oi = offsets ? (*offsets)[i] : 0.0;
    for (std::size_t j = 0; j < J; ++j)
      v(i, j) = S(oi) + alpha * x[j] - beta * S(C(i, j));
  }
}

template <typename S>
void intensity_total_k(const std::vector<S>& x, const S& alpha, const S& beta,
                       const std::vector<double>* offsets, const Cost& C,
                       double lambda_total, Grid<S>& out) {
  using std::exp;
  const std::size_t I = C.rows(), J = C.cols();
  Grid<S> v(I, J);
  fill_utilities(x, alpha, beta, offsets, C, v);
  double vmax = value_of(v(0, 0));
  for (const S& u : v.raw()) vmax = std::max(vmax, value_of(u));
  S denom = S(0.0);
  for (S& u : v.raw()) {
    u = exp(u - S(vmax));
    denom += u;
  }
  const S scale = S(lambda_total) / denom;
  out = Grid<S>(I, J);
  for (std::size_t k = 0; k < out.size(); ++k) out.raw()[k] = v.raw()[k] * scale;
}

template <typename S>
void intensity_singly_k(const std::vector<S>& x, const S& alpha, const S& beta,
                        const Cost& C, const std::vector<double>& row_totals,
                        Grid<S>& out) {
  using std::exp;
  const std::size_t I = C.rows(), J = C.cols();
  out = Grid<S>(I, J);
  std::vector<S> u(J);
  for (std::size_t i = 0; i < I; ++i) {
    double umax = -1e300;
    for (std::size_t j = 0; j < J; ++j) {
      u[j] = alpha * x[j] - beta * S(C(i, j));
      umax = std::max(umax, value_of(u[j]));
    }
    S denom = S(0.0);
    for (std::size_t j = 0; j < J; ++j) {
      u[j] = exp(u[j] - S(umax));
      denom += u[j];
    }
    const S scale = S(row_totals[i]) / denom;
    for (std::size_t j = 0; j < J; ++j) out(i, j) = u[j] * scale;
  }
}

// log intensities computed without leaving log space. ln L_ij stays exact and
// keeps its tangents even when L_ij itself underflows under extreme
// parameters, which is what keeps calibration alive from a hostile init.
template <typename S>
void log_intensity_total_k(const std::vector<S>& x, const S& alpha, const S& beta,
                           const std::vector<double>* offsets, const Cost& C,
                           double lambda_total, Grid<S>& out) {
  using std::exp;
  using std::log;
  out = Grid<S>(C.rows(), C.cols());
  fill_utilities(x, alpha, beta, offsets, C, out);
  double vmax = value_of(out(0, 0));
  for (const S& u : out.raw()) vmax = std::max(vmax, value_of(u));
  S denom = S(0.0);
  for (const S& u : out.raw()) denom += exp(u - S(vmax));
  const S shift = S(std::log(std::max(lambda_total, 1e-300)) - vmax) - log(denom);
  for (S& u : out.raw()) u += shift;
}

template <typename S>
void log_intensity_singly_k(const std::vector<S>& x, const S& alpha, const S& beta,
                            const Cost& C, const std::vector<double>& row_totals,
                            Grid<S>& out) {
  using std::exp;
  using std::log;
  const std::size_t I = C.rows(), J = C.cols();
  out = Grid<S>(I, J);
  for (std::size_t i = 0; i < I; ++i) {
    double umax = -1e300;
    for (std::size_t j = 0; j < J; ++j) {
      out(i, j) = alpha * x[j] - beta * S(C(i, j));
      umax = std::max(umax, value_of(out(i, j)));
    }
    S denom = S(0.0);
    for (std::size_t j = 0; j < J; ++j) denom += exp(out(i, j) - S(umax));
    const S shift =
        S(std::log(std::max(row_totals[i], 1e-300)) - umax) - log(denom);
    for (std::size_t j = 0; j < J; ++j) out(i, j) += shift;
  }
}

template <typename S>
std::vector<S> col_margins_k(const Grid<S>& L) {
  std::vector<S> c(L.cols(), S(0.0));
  for (std::size_t i = 0; i < L.rows(); ++i)
    for (std::size_t j = 0; j < L.cols(); ++j) c[j] += L(i, j);
  return c;
}

}  // namespace odm::detail
