#include "odm/sim.hpp"

#include <cmath>
#include <string>

#include "odm/detail/sim_kernels.hpp"
#include "odm/errors.hpp"

namespace odm {

namespace {

void check_shapes(const std::vector<double>& x, const SIMParams& p, const Cost& C) {
  if (x.size() != C.cols()) throw ConfigError("intensity: x length != cost cols");
  if (p.origin_offsets && p.origin_offsets->size() != C.rows())
    throw ConfigError("intensity: origin_offsets length != cost rows");
}

}  // namespace

Intensity intensity_total(const std::vector<double>& x, const SIMParams& p,
                          const Cost& C, double lambda_total) {
  check_shapes(x, p, C);
  if (!(lambda_total > 0.0)) throw ConfigError("intensity_total: lambda_total <= 0");
  Intensity out;
  detail::intensity_total_k(x, p.alpha, p.beta,
                            p.origin_offsets ? &*p.origin_offsets : nullptr, C,
                            lambda_total, out);
  return out;
}

Intensity intensity_singly(const std::vector<double>& x, const SIMParams& p,
                           const Cost& C, const std::vector<double>& row_totals) {
  check_shapes(x, p, C);
  if (row_totals.size() != C.rows())
    throw ConfigError("intensity_singly: row_totals length != cost rows");
  for (double r : row_totals)
    if (!(r > 0.0)) throw ConfigError("intensity_singly: row totals must be positive");
  Intensity out;
  detail::intensity_singly_k(x, p.alpha, p.beta, C, row_totals, out);
  return out;
}

IpfResult intensity_doubly_ipf(const std::vector<double>& x, const SIMParams& p,
                               const Cost& C, const std::vector<double>& row_totals,
                               const std::vector<double>& col_totals, double tol,
                               int max_iter) {
  check_shapes(x, p, C);
  const std::size_t I = C.rows(), J = C.cols();
  if (row_totals.size() != I || col_totals.size() != J)
    throw ConfigError("intensity_doubly_ipf: margin lengths mismatch");
  double rsum = 0.0, csum = 0.0;
  for (double r : row_totals) {
    if (!(r > 0.0)) throw ConfigError("intensity_doubly_ipf: non-positive row total");
    rsum += r;
  }
  for (double c : col_totals) {
    if (!(c > 0.0)) throw ConfigError("intensity_doubly_ipf: non-positive col total");
    csum += c;
  }
  if (std::fabs(rsum - csum) > 1e-9 * std::max(std::fabs(rsum), std::fabs(csum)))
    throw ConfigError("intensity_doubly_ipf: sum(row_totals) != sum(col_totals)");

  IpfResult res;
  // seed exp(alpha x_j - beta c_ij), stabilized by the max utility
  res.L = Intensity(I, J);
  double vmax = -1e300;
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t j = 0; j < J; ++j) {
      const double v = p.alpha * x[j] - p.beta * C(i, j);
      res.L(i, j) = v;
      vmax = std::max(vmax, v);
    }
  for (double& v : res.L.raw()) v = std::exp(v - vmax);

  for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
    for (std::size_t i = 0; i < I; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < J; ++j) s += res.L(i, j);
      const double f = row_totals[i] / s;
      for (std::size_t j = 0; j < J; ++j) res.L(i, j) *= f;
    }
    for (std::size_t j = 0; j < J; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < I; ++i) s += res.L(i, j);
      const double f = col_totals[j] / s;
      for (std::size_t i = 0; i < I; ++i) res.L(i, j) *= f;
    }
    // columns are exact right after the column pass; residual is on rows
    res.residual = 0.0;
    const auto rm = row_margins(res.L);
    for (std::size_t i = 0; i < I; ++i)
      res.residual = std::max(res.residual,
                              std::fabs(rm[i] - row_totals[i]) / row_totals[i]);
    if (res.residual <= tol) {
      ++res.iterations;
      res.converged = true;
      break;
    }
  }
  return res;
}

double compute_kappa(double lambda_total, double delta, const std::vector<double>& x) {
  double z = 0.0;
  for (double xi : x) z += std::exp(xi);
  if (!(z > 0.0) || !std::isfinite(z))
    throw NumericError("compute_kappa: sum exp(x) not positive-finite");
  return (lambda_total + delta * static_cast<double>(x.size())) / z;
}

}  // namespace odm
