#include "odm/harris_wilson.hpp"

#include <cmath>

#include "odm/detail/hw_kernels.hpp"
#include "odm/errors.hpp"

namespace odm {

namespace {

void check_params(const HWParams& hw, const SolverConfig& cfg) {
  if (!(hw.epsilon > 0.0)) throw ConfigError("hw: epsilon must be > 0");
  if (!(hw.kappa > 0.0)) throw ConfigError("hw: kappa must be > 0");
  if (!(hw.delta >= 0.0)) throw ConfigError("hw: delta must be >= 0");
  if (!(hw.sigma >= 0.0)) throw ConfigError("hw: sigma must be >= 0");
  if (!(cfg.dt > 0.0) || cfg.dt > 1.0) throw ConfigError("hw: dt must be in (0, 1]");
  if (cfg.tau < 1) throw ConfigError("hw: tau must be >= 1");
}

}  // namespace

std::vector<double> hw_drift(const std::vector<double>& x,
                             const std::vector<double>& col_margins,
                             const HWParams& hw) {
  if (x.size() != col_margins.size())
    throw ConfigError("hw_drift: x and col_margins lengths differ");
  std::vector<double> d(x.size());
  for (std::size_t j = 0; j < x.size(); ++j)
    d[j] = hw.epsilon * (col_margins[j] - hw.kappa * std::exp(x[j]) + hw.delta);
  return d;
}

std::vector<double> hw_solve(const std::vector<double>& x0, const HWParams& hw,
                             const std::function<Intensity(const std::vector<double>&)>& intensity_fn,
                             const SolverConfig& cfg, Rng& rng) {
  check_params(hw, cfg);
  const std::size_t J = x0.size();
  std::vector<double> noise(static_cast<std::size_t>(cfg.tau) * J);
  for (double& n : noise) n = rng.normal();
  auto col_fn = [&](const std::vector<double>& x) { return col_margins(intensity_fn(x)); };
  return detail::hw_solve_k(x0, hw.epsilon, hw.kappa, hw.delta, hw.sigma, cfg.dt,
                            cfg.tau, col_fn, noise.data());
}

}  // namespace odm
