#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "odm/rng.hpp"
#include "odm/sim.hpp"
#include "odm/table.hpp"

namespace odm {

struct SolverConfig {
  double dt = 0.001;      // step size, in (0, 1]
  int tau = 1;            // number of steps, >= 1
  std::uint64_t seed = 0; // stream seed when the caller does not supply one
};

// Per-destination drift in log space: eps * (Lambda_+j - kappa e^{x_j} + delta).
std::vector<double> hw_drift(const std::vector<double>& x,
                             const std::vector<double>& col_margins,
                             const HWParams& hw);

// tau Euler-Maruyama steps from x0; Lambda recomputed from intensity_fn at
// every step. Consumes exactly J normal draws per step, destination order,
// regardless of sigma, so stream positions never depend on the noise level.
std::vector<double> hw_solve(const std::vector<double>& x0, const HWParams& hw,
                             const std::function<Intensity(const std::vector<double>&)>& intensity_fn,
                             const SolverConfig& cfg, Rng& rng);

}  // namespace odm
