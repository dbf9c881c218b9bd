#include <doctest.h>

#include <cmath>
#include <vector>

#include "odm/errors.hpp"
#include "odm/harris_wilson.hpp"
#include "odm/rng.hpp"
#include "odm/sim.hpp"

using namespace odm;

TEST_CASE("drift hand values") {
  HWParams hw;  // eps 1, kappa 1, delta 0
  const auto zero = hw_drift({0.0, 0.0}, {1.0, 1.0}, hw);
  CHECK(zero[0] == doctest::Approx(0.0));
  CHECK(zero[1] == doctest::Approx(0.0));

  const auto d = hw_drift({0.0, 0.0}, {2.0, 3.0}, hw);
  CHECK(d[0] == doctest::Approx(1.0));
  CHECK(d[1] == doctest::Approx(2.0));

  HWParams hw2 = hw;
  hw2.epsilon = 2.0;
  const auto dd = hw_drift({0.0, 0.0}, {2.0, 3.0}, hw2);
  CHECK(dd[0] == doctest::Approx(2.0 * d[0]));
  CHECK(dd[1] == doctest::Approx(2.0 * d[1]));

  HWParams hw3 = hw;
  hw3.delta = 0.5;
  const auto d3 = hw_drift({0.0}, {1.0}, hw3);
  CHECK(d3[0] == doctest::Approx(0.5));
}

namespace {

// column margins of a totally constrained intensity at x
std::function<Intensity(const std::vector<double>&)> total_fn(const SIMParams& p,
                                                              const Cost& C,
                                                              double mass) {
  return [=, &C](const std::vector<double>& x) { return intensity_total(x, p, C, mass); };
}

}  // namespace

TEST_CASE("equilibrium is a fixed point of the deterministic solver") {
  HWParams hw;
  hw.kappa = 2.0;
  // constant margins (4, 6): equilibrium x* = ln(margin / kappa)
  auto fn = [](const std::vector<double>&) {
    Intensity L(1, 2);
    L(0, 0) = 4.0;
    L(0, 1) = 6.0;
    return L;
  };
  const std::vector<double> xstar = {std::log(2.0), std::log(3.0)};
  SolverConfig cfg;
  cfg.dt = 0.01;
  cfg.tau = 50;
  Rng rng(1);
  const auto out = hw_solve(xstar, hw, fn, cfg, rng);
  CHECK(out[0] == doctest::Approx(xstar[0]).epsilon(1e-12));
  CHECK(out[1] == doctest::Approx(xstar[1]).epsilon(1e-12));
}

TEST_CASE("deterministic solver converges and satisfies the zero-drift identity") {
  Rng setup(31);
  SIMParams p;
  p.alpha = 0.6;
  p.beta = 0.4;
  Cost C(4, 3);
  for (auto& c : C.raw()) c = setup.uniform01();
  const double mass = 30.0;
  HWParams hw;
  hw.kappa = compute_kappa(mass, 0.0, {0.0, 0.0, 0.0});

  SolverConfig cfg;
  cfg.dt = 0.01;
  cfg.tau = 200;
  auto fn = total_fn(p, C, mass);
  std::vector<double> x = {0.0, 0.0, 0.0};
  Rng rng(2);
  for (int round = 0; round < 500; ++round) {
    x = hw_solve(x, hw, fn, cfg, rng);
    const auto d = hw_drift(x, col_margins(fn(x)), hw);
    double m = 0.0;
    for (double v : d) m = std::max(m, std::fabs(v));
    if (m < 1e-10) break;
  }
  const auto cm = col_margins(fn(x));
  for (std::size_t j = 0; j < x.size(); ++j)
    CHECK(std::fabs(cm[j] - hw.kappa * std::exp(x[j])) < 1e-8);

  // sum of zero-drift conditions: kappa * sum e^x = mass + delta * J
  double z = 0.0;
  for (double v : x) z += std::exp(v);
  CHECK(hw.kappa * z == doctest::Approx(mass).epsilon(1e-6));
}

TEST_CASE("solver trajectories are deterministic given a seed") {
  SIMParams p;
  p.alpha = 0.8;
  Cost C(2, 2);
  C(0, 1) = 0.5;
  C(1, 0) = 0.5;
  HWParams hw;
  hw.sigma = 0.3;
  SolverConfig cfg;
  cfg.dt = 0.001;
  cfg.tau = 100;
  auto fn = total_fn(p, C, 10.0);
  Rng r1(99), r2(99);
  const auto a = hw_solve({0.1, -0.1}, hw, fn, cfg, r1);
  const auto b = hw_solve({0.1, -0.1}, hw, fn, cfg, r2);
  CHECK(a == b);
}

TEST_CASE("noise draws are consumed even with sigma zero") {
  SIMParams p;
  Cost C(2, 2);
  HWParams hw;  // sigma = 0
  SolverConfig cfg;
  cfg.dt = 0.001;
  cfg.tau = 3;
  auto fn = total_fn(p, C, 4.0);
  Rng used(5);
  hw_solve({0.0, 0.0}, hw, fn, cfg, used);
  // tau * J normals at 2 engine outputs each
  Rng fresh(5);
  for (int i = 0; i < 2 * 3 * 2; ++i) fresh.raw();
  CHECK(used.raw() == fresh.raw());
}

TEST_CASE("sigma controls the spread around the deterministic path") {
  SIMParams p;
  Cost C(2, 2);
  HWParams quiet;
  HWParams loud;
  loud.sigma = 0.5;
  SolverConfig cfg;
  cfg.dt = 0.01;
  cfg.tau = 10;
  auto fn = total_fn(p, C, 4.0);
  Rng r1(6), r2(6);
  const auto a = hw_solve({0.0, 0.0}, quiet, fn, cfg, r1);
  const auto b = hw_solve({0.0, 0.0}, loud, fn, cfg, r2);
  CHECK(a != b);
}

TEST_CASE("divergence reports a numeric error") {
  HWParams hw;
  hw.epsilon = 1.0;
  auto fn = [](const std::vector<double>&) {
    Intensity L(1, 1);
    L(0, 0) = 1e308;
    return L;
  };
  SolverConfig cfg;
  cfg.dt = 1.0;
  cfg.tau = 5;
  Rng rng(3);
  CHECK_THROWS_AS(hw_solve({0.0}, hw, fn, cfg, rng), NumericError);
}
