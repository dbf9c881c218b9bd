#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "odm/errors.hpp"
#include "odm/harris_wilson.hpp"
#include "odm/neural.hpp"
#include "odm/rng.hpp"
#include "odm/sim.hpp"

using namespace odm;

TEST_CASE("initial weights are uniform over [0,4] with the declared count") {
  Rng rng(77);
  const NetworkWeights W = nn_init(rng, 6, 20);
  CHECK(W.w.size() == (6 + 1) * 20 + (20 + 1) * 2);
  CHECK(W.size() == W.w.size());
  double lo = 4.0, hi = 0.0;
  for (double v : W.w) {
    CHECK(v >= 0.0);
    CHECK(v < 4.0);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo < 0.5);  // spread sanity
  CHECK(hi > 3.5);

  Rng r2(77);
  CHECK(nn_init(r2, 6, 20).w == W.w);
}

TEST_CASE("forward pass hand value") {
  NetworkWeights W(1, 1);
  W.w1(0, 0) = 2.0;
  W.b1(0) = 0.0;
  W.w2(0, 0) = -1.0;
  W.w2(0, 1) = 1.0;
  W.b2(0) = 0.0;
  W.b2(1) = 0.0;
  const auto [alpha, beta] = nn_forward({3.0}, W);
  CHECK(alpha == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(beta == doctest::Approx(6.0).epsilon(1e-15));
}

TEST_CASE("forward pass with zero weights returns |output bias|") {
  NetworkWeights W(3, 4);
  W.b2(0) = -1.25;
  W.b2(1) = 0.5;
  const auto [alpha, beta] = nn_forward({1.0, -2.0, 0.5}, W);
  CHECK(alpha == 1.25);
  CHECK(beta == 0.5);
}

TEST_CASE("forward pass is invariant to a joint sign flip of an output column") {
  Rng rng(13);
  NetworkWeights W = nn_init(rng, 4, 3);
  std::vector<double> y = {0.3, -1.0, 0.4, 2.0};
  const auto base = nn_forward(y, W);
  for (std::size_t k = 0; k < W.H; ++k) W.w2(k, 0) = -W.w2(k, 0);
  W.b2(0) = -W.b2(0);
  const auto flipped = nn_forward(y, W);
  CHECK(flipped.first == base.first);
  CHECK(flipped.second == base.second);
}

TEST_CASE("loss hand values and additive decomposition") {
  LossConfig cfg;
  cfg.sigma_d = 0.5;
  Observed data;
  data.y = std::vector<double>{1.0, 2.0};
  const std::vector<double> x = {1.1, 1.8};

  // L_x = ((0.1)^2 + (0.2)^2) / (2 * 0.25)
  const double lx = loss_eval(cfg, x, nullptr, nullptr, data);
  CHECK(lx == doctest::Approx(0.05 / 0.5).epsilon(1e-12));

  // x = y is a perfect fit
  CHECK(loss_eval(cfg, {1.0, 2.0}, nullptr, nullptr, data) == 0.0);

  Table T(2, 2);
  T(0, 0) = 1;
  T(0, 1) = 2;
  T(1, 0) = 3;
  T(1, 1) = 4;
  Intensity L(2, 2);
  L(0, 0) = 2.0;
  L(0, 1) = 1.0;
  L(1, 0) = 1.0;
  L(1, 1) = 2.0;

  LossConfig joint = cfg;
  joint.scheme = Scheme::JOINT;
  double lt = 0.0;
  for (std::size_t k = 0; k < 4; ++k)
    lt -= static_cast<double>(T.raw()[k]) * std::log(L.raw()[k]) - L.raw()[k];
  lt /= joint.sigma_T;
  CHECK(loss_eval(joint, x, &T, &L, data) ==
        doctest::Approx(lx + lt).epsilon(1e-12));

  // distance term stacks on top
  Cost C(2, 2);
  C(0, 0) = 0.1;
  C(0, 1) = 0.9;
  C(1, 0) = 0.4;
  C(1, 1) = 0.2;
  Observed dd = data;
  dd.dist_origin = std::vector<double>{1.0, 0.5};
  LossConfig full = joint;
  full.use_distance_term = true;
  double ld = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    double di = 0.0;
    for (std::size_t j = 0; j < 2; ++j) di += L(i, j) * C(i, j);
    const double d = di - (*dd.dist_origin)[i];
    ld += d * d / (2.0 * full.sigma_L * full.sigma_L);
  }
  CHECK(loss_eval(full, x, &T, &L, dd, &C) ==
        doctest::Approx(lx + lt + ld).epsilon(1e-12));
}

TEST_CASE("loss input validation") {
  LossConfig cfg;
  cfg.sigma_d = 0.1;
  Observed data;
  data.y = std::vector<double>{0.0};
  LossConfig joint = cfg;
  joint.scheme = Scheme::JOINT;
  CHECK_THROWS_AS(loss_eval(joint, {0.0}, nullptr, nullptr, data), ConfigError);
  Observed noy;
  CHECK_THROWS_AS(loss_eval(cfg, {0.0}, nullptr, nullptr, noy), ConfigError);
}

namespace {

// pipeline shared by the gradient tests
struct GradSetup {
  Cost C;
  Observed data;
  CalibPipeline ctx;
  LossConfig loss;
  Table T;

  GradSetup(std::uint64_t seed, bool joint, bool with_noise, bool distance) : C(2, 4) {
    Rng rng(seed);
    for (auto& c : C.raw()) c = rng.uniform01();
    std::vector<double> y(4);
    for (auto& v : y) v = rng.uniform01() - 0.5;
    data.y = y;

    loss.sigma_d = 0.2;
    loss.scheme = joint ? Scheme::JOINT : Scheme::DISJOINT;
    loss.use_distance_term = distance;
    if (distance) data.dist_origin = std::vector<double>{1.0, 2.0};

    ctx.model = IntensityModel::TOTAL;
    ctx.cost = &C;
    ctx.lambda_total = 10.0;
    ctx.hw.epsilon = 1.0;
    ctx.hw.kappa = compute_kappa(10.0, 0.0, y);
    ctx.hw.sigma = with_noise ? 0.05 : 0.0;
    ctx.dt = 0.01;
    ctx.tau = 2;
    ctx.x0 = y;
    if (with_noise) {
      ctx.noise.resize(static_cast<std::size_t>(ctx.tau) * 4);
      for (auto& n : ctx.noise) n = rng.normal();
    }

    T = Table(2, 4);
    for (auto& t : T.raw()) t = static_cast<long long>(rng.uniform_below(5));
  }
};

NetworkWeights small_weights(std::uint64_t seed, std::size_t J, std::size_t H) {
  Rng rng(seed);
  NetworkWeights W(J, H);
  for (auto& w : W.w) w = 0.1 + 0.3 * rng.uniform01();
  return W;
}

double max_rel_error(const GradSetup& s, const NetworkWeights& W) {
  const CalibStep step = loss_grad(s.loss, W, s.data, s.ctx, &s.T);
  const double h = 1e-5;
  NetworkWeights Wp = W;
  double gmax = 0.0;
  std::vector<double> fd(W.w.size());
  for (std::size_t k = 0; k < W.w.size(); ++k) {
    Wp.w[k] = W.w[k] + h;
    const double up = loss_grad(s.loss, Wp, s.data, s.ctx, &s.T).loss;
    Wp.w[k] = W.w[k] - h;
    const double dn = loss_grad(s.loss, Wp, s.data, s.ctx, &s.T).loss;
    Wp.w[k] = W.w[k];
    fd[k] = (up - dn) / (2.0 * h);
    gmax = std::max(gmax, std::fabs(fd[k]));
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < W.w.size(); ++k) {
    const double denom = std::max(std::fabs(fd[k]), 1e-6 * gmax);
    worst = std::max(worst, std::fabs(step.grad.w[k] - fd[k]) / denom);
  }
  return worst;
}

}  // namespace

TEST_CASE("gradient matches central finite differences") {
  SUBCASE("deterministic solver, x-term only") {
    GradSetup s(101, false, false, false);
    CHECK(max_rel_error(s, small_weights(1, 4, 3)) < 1e-4);
  }
  SUBCASE("joint scheme with a fixed table") {
    GradSetup s(102, true, false, false);
    CHECK(max_rel_error(s, small_weights(2, 4, 3)) < 1e-4);
  }
  SUBCASE("frozen noise path") {
    GradSetup s(103, true, true, false);
    CHECK(max_rel_error(s, small_weights(3, 4, 3)) < 1e-4);
  }
  SUBCASE("distance term") {
    GradSetup s(104, false, false, true);
    CHECK(max_rel_error(s, small_weights(4, 4, 3)) < 1e-4);
  }
}

TEST_CASE("gradient vanishes at the solver equilibrium under the x-term") {
  // theta fixed by construction: h = 1, u = (alpha*, beta*)
  const double alpha = 0.7, beta = 0.4;
  Cost C(3, 3);
  Rng rng(55);
  for (auto& c : C.raw()) c = rng.uniform01();
  SIMParams p;
  p.alpha = alpha;
  p.beta = beta;
  const double mass = 12.0;
  HWParams hw;  // kappa 1
  auto fn = [&](const std::vector<double>& x) { return intensity_total(x, p, C, mass); };
  SolverConfig sc;
  sc.dt = 0.01;
  sc.tau = 400;
  std::vector<double> x = {0.0, 0.0, 0.0};
  Rng solver_rng(1);
  for (int round = 0; round < 400; ++round) x = hw_solve(x, hw, fn, sc, solver_rng);

  NetworkWeights W(3, 1);
  W.b1(0) = 1.0;
  W.w2(0, 0) = alpha;
  W.w2(0, 1) = beta;

  Observed data;
  data.y = x;
  CalibPipeline ctx;
  ctx.model = IntensityModel::TOTAL;
  ctx.cost = &C;
  ctx.lambda_total = mass;
  ctx.hw = hw;
  ctx.dt = 0.001;
  ctx.tau = 1;
  ctx.x0 = x;
  LossConfig cfg;
  cfg.sigma_d = 0.1;
  const CalibStep step = loss_grad(cfg, W, data, ctx, nullptr);
  CHECK(step.alpha == doctest::Approx(alpha));
  CHECK(step.beta == doctest::Approx(beta));
  for (double g : step.grad.w) CHECK(std::fabs(g) < 1e-8);
}

TEST_CASE("theta clipping caps the forward value") {
  NetworkWeights W(1, 1);
  W.w1(0, 0) = 0.0;
  W.b1(0) = 1.0;
  W.w2(0, 0) = 5.0;
  W.w2(0, 1) = 0.3;
  Cost C(1, 1);
  Observed data;
  data.y = std::vector<double>{0.0};
  CalibPipeline ctx;
  ctx.cost = &C;
  ctx.lambda_total = 1.0;
  ctx.x0 = {0.0};
  ctx.theta_max = 2.0;
  LossConfig cfg;
  cfg.sigma_d = 0.1;
  const CalibStep step = loss_grad(cfg, W, data, ctx, nullptr);
  CHECK(step.alpha == 2.0);  // clipped from 5
  CHECK(step.beta == doctest::Approx(0.3));
}

TEST_CASE("adam first step moves by about the learning rate") {
  NetworkWeights W(1, 1);
  for (auto& w : W.w) w = 0.5;
  NetworkWeights g = W;
  for (auto& v : g.w) v = 0.3;
  AdamState st(W.w.size(), 0.002);
  adam_step(W, g, st);
  CHECK(st.t == 1);
  for (double w : W.w) CHECK(std::fabs(w - (0.5 - 0.002)) < 1e-9);

  // zero gradient is a fixed point
  NetworkWeights W2(1, 1);
  for (auto& w : W2.w) w = 1.5;
  NetworkWeights zero(1, 1);
  AdamState st2(W2.w.size());
  adam_step(W2, zero, st2);
  for (double w : W2.w) CHECK(w == 1.5);
}

TEST_CASE("adam trajectories are reproducible") {
  NetworkWeights A(2, 2), B(2, 2);
  Rng rng(31);
  for (std::size_t k = 0; k < A.w.size(); ++k) A.w[k] = B.w[k] = rng.uniform01();
  AdamState sa(A.w.size()), sb(B.w.size());
  Rng gr(32);
  for (int t = 0; t < 25; ++t) {
    NetworkWeights g(2, 2);
    for (auto& v : g.w) v = gr.normal();
    adam_step(A, g, sa);
    adam_step(B, g, sb);
  }
  CHECK(A.w == B.w);
}

TEST_CASE("weight checkpoints round trip and carry a little-endian header") {
  const auto dir = std::filesystem::temp_directory_path() / "odm_neural_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "w.bin").string();

  Rng rng(91);
  NetworkWeights W = nn_init(rng, 3, 2);
  save_weights(path, W);
  const NetworkWeights R = load_weights(path);
  CHECK(R.J == 3);
  CHECK(R.H == 2);
  CHECK(R.w == W.w);

  std::ifstream in(path, std::ios::binary);
  std::vector<unsigned char> head(12);
  in.read(reinterpret_cast<char*>(head.data()), 12);
  CHECK(head[0] == 'O');
  CHECK(head[1] == 'D');
  CHECK(head[2] == 'M');
  CHECK(head[3] == 'W');
  CHECK(head[4] == 3);  // J, little-endian
  for (int k = 5; k < 12; ++k) CHECK(head[k] == 0);

  {
    std::ofstream bad(dir / "bad.bin", std::ios::binary);
    bad << "NOPE";
  }
  CHECK_THROWS_AS(load_weights((dir / "bad.bin").string()), ConfigError);
}

TEST_CASE("default observation noise scale") {
  CHECK(default_sigma_d(10) == doctest::Approx(0.03 * std::log(10.0)).epsilon(1e-15));
  CHECK_THROWS_AS(default_sigma_d(1), ConfigError);
}
