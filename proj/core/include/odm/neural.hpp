#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "odm/observed.hpp"
#include "odm/rng.hpp"
#include "odm/sim.hpp"
#include "odm/table.hpp"

namespace odm {

// One hidden layer, linear hidden activation, |.| output activation:
//   h = W1^T y + b1,  theta = |W2^T h + b2|  with theta = (alpha, beta).
// Stored flat in the order W1 (row-major J x H), b1, W2 (row-major H x 2), b2;
// nn_init draws and checkpoints serialize in exactly this order.
struct NetworkWeights {
  std::size_t J = 0;
  std::size_t H = 0;
  std::vector<double> w;

  NetworkWeights() = default;
  NetworkWeights(std::size_t j, std::size_t h)
      : J(j), H(h), w((j + 1) * h + (h + 1) * 2, 0.0) {}

  std::size_t size() const { return (J + 1) * H + (H + 1) * 2; }

  double& w1(std::size_t j, std::size_t k) { return w[j * H + k]; }
  double w1(std::size_t j, std::size_t k) const { return w[j * H + k]; }
  double& b1(std::size_t k) { return w[J * H + k]; }
  double b1(std::size_t k) const { return w[J * H + k]; }
  double& w2(std::size_t k, std::size_t c) { return w[(J + 1) * H + k * 2 + c]; }
  double w2(std::size_t k, std::size_t c) const { return w[(J + 1) * H + k * 2 + c]; }
  double& b2(std::size_t c) { return w[(J + 1) * H + H * 2 + c]; }
  double b2(std::size_t c) const { return w[(J + 1) * H + H * 2 + c]; }
};

enum class Scheme { JOINT, DISJOINT };

struct LossConfig {
  Scheme scheme = Scheme::DISJOINT;
  double sigma_d = 0.0;  // <= 0 means "resolve to default_sigma_d(J)"
  double sigma_T = 0.07;
  double sigma_L = 0.07;
  bool use_distance_term = false;
};

// default observation noise scale: 3% of log J
double default_sigma_d(std::size_t J);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long long t = 0;
  double lr = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  explicit AdamState(std::size_t n, double learning_rate = 0.002)
      : m(n, 0.0), v(n, 0.0), lr(learning_rate) {}
};

// All entries i.i.d. Uniform[0,4], flat storage order.
NetworkWeights nn_init(Rng& rng, std::size_t J, std::size_t H);

// theta = (alpha, beta), both >= 0 by construction.
std::pair<double, double> nn_forward(const std::vector<double>& y,
                                     const NetworkWeights& W);

// L = L_x + [JOINT] L_T + [use_distance_term] L_D with
//   L_x = sum_j (x_j - y_j)^2 / (2 sigma_d^2)
//   L_T = -sum_ij (T_ij ln Lam_ij - Lam_ij) / sigma_T
//   L_D = sum_i ((Lam ⊙ C)_i+ - D_i+)^2 / (2 sigma_L^2)
// T and Lam may be null when the scheme does not need them; cost is required
// only with the distance term.
double loss_eval(const LossConfig& cfg, const std::vector<double>& x, const Table* T,
                 const Intensity* Lam, const Observed& data, const Cost* cost = nullptr);

// Everything needed to run W -> theta -> (solver, intensity) -> loss with a
// frozen noise path (common random numbers under differentiation).
struct CalibPipeline {
  IntensityModel model = IntensityModel::TOTAL;
  const Cost* cost = nullptr;
  double lambda_total = 0.0;                          // TOTAL model mass
  std::vector<double> row_totals;                     // SINGLY model margins
  const std::vector<double>* origin_offsets = nullptr;  // TOTAL model only
  HWParams hw;
  double dt = 0.001;
  int tau = 1;
  std::vector<double> x0;     // solver start state
  std::vector<double> noise;  // tau*J normals; empty = deterministic drift only
  double theta_max = 0.0;     // > 0 clips theta into [0, theta_max]
};

struct CalibStep {
  double alpha = 0.0;  // theta actually used (post activation, post clip)
  double beta = 0.0;
  std::vector<double> x;
  Intensity lambda;
  double loss = 0.0;
  NetworkWeights grad;
};

// Exact gradient of the composite loss w.r.t. every weight: forward-mode
// tangents in (alpha, beta) through solver+intensity+loss, chained with a
// reverse pass through the two-layer network. T_prev feeds L_T under JOINT.
CalibStep loss_grad(const LossConfig& cfg, const NetworkWeights& W, const Observed& data,
                    const CalibPipeline& ctx, const Table* T_prev);

// In-place Adam update with bias correction; grad shaped like W.
void adam_step(NetworkWeights& W, const NetworkWeights& grad, AdamState& st);

// Checkpoints: "ODMW" magic, uint64 J, uint64 H, then size() doubles in flat
// storage order; every field little-endian.
void save_weights(const std::string& path, const NetworkWeights& W);
NetworkWeights load_weights(const std::string& path);

}  // namespace odm
