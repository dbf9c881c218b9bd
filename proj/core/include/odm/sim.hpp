#pragma once

#include <optional>
#include <vector>

#include "odm/table.hpp"

namespace odm {

// Intensity models usable inside the calibration loop. The doubly constrained
// map exists only as an IPF diagnostic (see intensity_doubly_ipf).
enum class IntensityModel { TOTAL, SINGLY };

struct SIMParams {
  double alpha = 0.0;  // attractiveness exponent, >= 0
  double beta = 0.0;   // deterrence coefficient, >= 0
  // per-origin utility offsets o_i (generalized utility); totally constrained
  // model only, absent = all zero
  std::optional<std::vector<double>> origin_offsets;
};

struct HWParams {
  double epsilon = 1.0;  // responsiveness, > 0
  double kappa = 1.0;    // job competition, > 0
  double delta = 0.0;    // minimum job floor, >= 0
  double sigma = 0.0;    // SDE noise std, >= 0
};

// Lambda_ij = lambda_total * exp(o_i + alpha x_j - beta c_ij) / sum_km exp(...)
Intensity intensity_total(const std::vector<double>& x, const SIMParams& p,
                          const Cost& C, double lambda_total);

// Row-constrained: Lambda_i+ = row_totals[i]; within a row, softmax of
// alpha x_j - beta c_ij.
Intensity intensity_singly(const std::vector<double>& x, const SIMParams& p,
                           const Cost& C, const std::vector<double>& row_totals);

struct IpfResult {
  Intensity L;
  bool converged = false;
  double residual = 0.0;  // max relative margin deviation at exit
  int iterations = 0;
};

// Proportional fitting of the seed exp(alpha x_j - beta c_ij) to both margins.
// Diagnostic / initialization map only — not part of the calibration loop.
// Non-convergence is reported via the result, not thrown.
IpfResult intensity_doubly_ipf(const std::vector<double>& x, const SIMParams& p,
                               const Cost& C, const std::vector<double>& row_totals,
                               const std::vector<double>& col_totals,
                               double tol = 1e-8, int max_iter = 1000);

// kappa = (lambda_total + delta * J) / sum_j exp(x_j)
double compute_kappa(double lambda_total, double delta, const std::vector<double>& x);

}  // namespace odm
