#include "odm/neural.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "odm/detail/hw_kernels.hpp"
#include "odm/detail/sim_kernels.hpp"
#include "odm/dual.hpp"
#include "odm/errors.hpp"

namespace odm {

double default_sigma_d(std::size_t J) {
  if (J < 2) throw ConfigError("default_sigma_d: need J >= 2");
  return 0.03 * std::log(static_cast<double>(J));
}

NetworkWeights nn_init(Rng& rng, std::size_t J, std::size_t H) {
  if (J < 1 || H < 1) throw ConfigError("nn_init: J and H must be >= 1");
  NetworkWeights W(J, H);
  for (double& x : W.w) x = 4.0 * rng.uniform01();
  return W;
}

namespace {

// hidden layer + pre-activation outputs; shared by forward and backprop
void net_affine(const std::vector<double>& y, const NetworkWeights& W,
                std::vector<double>& h, double u[2]) {
  if (y.size() != W.J) throw ConfigError("nn_forward: y length != J");
  h.assign(W.H, 0.0);
  for (std::size_t k = 0; k < W.H; ++k) {
    double s = W.b1(k);
    for (std::size_t j = 0; j < W.J; ++j) s += W.w1(j, k) * y[j];
    h[k] = s;
  }
  for (std::size_t c = 0; c < 2; ++c) {
    double s = W.b2(c);
    for (std::size_t k = 0; k < W.H; ++k) s += W.w2(k, c) * h[k];
    u[c] = s;
  }
}

double sign0(double u) { return u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0); }

// ln with a finite floor: cells that underflowed to 0 under extreme utilities
// keep the loss finite (constant branch, zero tangent)
template <typename S>
S safe_log(const S& v) {
  using std::log;
  if (value_of(v) < 1e-300) return S(-700.0);
  return log(v);
}

// logL, when given, supplies ln L computed in log space; otherwise ln is taken
// of the (possibly underflowed) intensity values with a finite floor
template <typename S>
S loss_terms(const LossConfig& cfg, const std::vector<S>& x, const Table* T,
             const Grid<S>* L, const Grid<S>* logL, const Observed& data,
             const Cost* cost) {
  using std::log;
  if (!data.y) throw ConfigError("loss: observed y required");
  if (x.size() != data.y->size()) throw ConfigError("loss: x length != y length");
  if (!(cfg.sigma_d > 0.0)) throw ConfigError("loss: sigma_d must be > 0");

  const std::vector<double>& y = *data.y;
  S total = S(0.0);
  const double inv2sd = 1.0 / (2.0 * cfg.sigma_d * cfg.sigma_d);
  for (std::size_t j = 0; j < x.size(); ++j) {
    const S d = x[j] - S(y[j]);
    total += d * d * S(inv2sd);
  }

  if (cfg.scheme == Scheme::JOINT) {
    if (!T || !L)
      throw ConfigError("loss: JOINT scheme requires a table and an intensity");
    if (T->rows() != L->rows() || T->cols() != L->cols())
      throw ConfigError("loss: table/intensity shape mismatch");
    if (!(cfg.sigma_T > 0.0)) throw ConfigError("loss: sigma_T must be > 0");
    S lt = S(0.0);
    for (std::size_t k = 0; k < T->size(); ++k) {
      const double t = static_cast<double>(T->raw()[k]);
      lt -= L->raw()[k];
      if (t != 0.0)
        lt += S(t) * (logL ? logL->raw()[k] : safe_log(L->raw()[k]));
    }
    total += -lt / S(cfg.sigma_T);
  }

  if (cfg.use_distance_term) {
    if (!L || !cost || !data.dist_origin)
      throw ConfigError("loss: distance term requires intensity, cost, and D_i+");
    if (cost->rows() != L->rows() || cost->cols() != L->cols() ||
        data.dist_origin->size() != L->rows())
      throw ConfigError("loss: distance term shape mismatch");
    if (!(cfg.sigma_L > 0.0)) throw ConfigError("loss: sigma_L must be > 0");
    const double inv2sl = 1.0 / (2.0 * cfg.sigma_L * cfg.sigma_L);
    for (std::size_t i = 0; i < L->rows(); ++i) {
      S di = S(0.0);
      for (std::size_t j = 0; j < L->cols(); ++j)
        di += (*L)(i, j) * S((*cost)(i, j));
      const S d = di - S((*data.dist_origin)[i]);
      total += d * d * S(inv2sl);
    }
  }
  return total;
}

// value clamped into [lo, hi]; tangent passes inside, zero outside
Dual2 clip_st(const Dual2& u, double lo, double hi) {
  if (u.v < lo) return Dual2(lo);
  if (u.v > hi) return Dual2(hi);
  return u;
}

}  // namespace

std::pair<double, double> nn_forward(const std::vector<double>& y,
                                     const NetworkWeights& W) {
  std::vector<double> h;
  double u[2];
  net_affine(y, W, h, u);
  return {std::fabs(u[0]), std::fabs(u[1])};
}

double loss_eval(const LossConfig& cfg, const std::vector<double>& x, const Table* T,
                 const Intensity* Lam, const Observed& data, const Cost* cost) {
  return loss_terms<double>(cfg, x, T, Lam, nullptr, data, cost);
}

CalibStep loss_grad(const LossConfig& cfg, const NetworkWeights& W, const Observed& data,
                    const CalibPipeline& ctx, const Table* T_prev) {
  if (!ctx.cost) throw ConfigError("loss_grad: pipeline cost matrix missing");
  if (!data.y) throw ConfigError("loss_grad: observed y required");
  const std::size_t J = data.y->size();
  if (ctx.x0.size() != J) throw ConfigError("loss_grad: x0 length != J");
  if (!ctx.noise.empty() &&
      ctx.noise.size() != static_cast<std::size_t>(ctx.tau) * J)
    throw ConfigError("loss_grad: noise path length != tau*J");

  // forward through the network (plain doubles)
  std::vector<double> h;
  double u[2];
  net_affine(*data.y, W, h, u);

  // theta with tangent seeds; clipping is straight-through
  Dual2 theta[2] = {Dual2(std::fabs(u[0]), 1.0, 0.0), Dual2(std::fabs(u[1]), 0.0, 1.0)};
  if (ctx.theta_max > 0.0) {
    theta[0] = clip_st(theta[0], 0.0, ctx.theta_max);
    theta[1] = clip_st(theta[1], 0.0, ctx.theta_max);
  }
  const Dual2 alpha = theta[0], beta = theta[1];

  // solve the attraction dynamics with tangents riding along; the intensity is
  // carried in log space so its tangents survive extreme parameter values
  auto log_intensity_at = [&](const std::vector<Dual2>& x, Grid<Dual2>& out) {
    if (ctx.model == IntensityModel::TOTAL)
      detail::log_intensity_total_k(x, alpha, beta, ctx.origin_offsets, *ctx.cost,
                                    ctx.lambda_total, out);
    else
      detail::log_intensity_singly_k(x, alpha, beta, *ctx.cost, ctx.row_totals,
                                     out);
  };
  auto col_fn = [&](const std::vector<Dual2>& x) {
    Grid<Dual2> lg;
    log_intensity_at(x, lg);
    for (Dual2& u : lg.raw()) u = exp(u);
    return detail::col_margins_k(lg);
  };
  std::vector<Dual2> x0(ctx.x0.begin(), ctx.x0.end());
  std::vector<Dual2> x = detail::hw_solve_k(std::move(x0), ctx.hw.epsilon, ctx.hw.kappa,
                                            ctx.hw.delta, ctx.hw.sigma, ctx.dt, ctx.tau,
                                            col_fn, ctx.noise.empty() ? nullptr
                                                                      : ctx.noise.data());
  Grid<Dual2> logL;
  log_intensity_at(x, logL);
  Grid<Dual2> L(logL.rows(), logL.cols());
  for (std::size_t k = 0; k < L.size(); ++k) L.raw()[k] = exp(logL.raw()[k]);

  const Dual2 loss =
      loss_terms<Dual2>(cfg, x, cfg.scheme == Scheme::JOINT ? T_prev : nullptr,
                        &L, &logL, data, ctx.cost);
  if (!std::isfinite(loss.v) || !std::isfinite(loss.d0) || !std::isfinite(loss.d1))
    throw NumericError("loss_grad: non-finite loss or tangent");

  // chain dL/dtheta through |.| back into the affine stack
  const double g[2] = {loss.d0 * sign0(u[0]), loss.d1 * sign0(u[1])};
  CalibStep out;
  out.grad = NetworkWeights(W.J, W.H);
  std::vector<double> dh(W.H, 0.0);
  for (std::size_t c = 0; c < 2; ++c) {
    out.grad.b2(c) = g[c];
    for (std::size_t k = 0; k < W.H; ++k) {
      out.grad.w2(k, c) = g[c] * h[k];
      dh[k] += g[c] * W.w2(k, c);
    }
  }
  for (std::size_t k = 0; k < W.H; ++k) {
    out.grad.b1(k) = dh[k];
    for (std::size_t j = 0; j < W.J; ++j) out.grad.w1(j, k) = dh[k] * (*data.y)[j];
  }
  for (double gw : out.grad.w)
    if (!std::isfinite(gw)) throw NumericError("loss_grad: non-finite gradient");

  out.alpha = alpha.v;
  out.beta = beta.v;
  out.x.resize(J);
  for (std::size_t j = 0; j < J; ++j) out.x[j] = x[j].v;
  out.lambda = Intensity(L.rows(), L.cols());
  for (std::size_t k = 0; k < L.size(); ++k) out.lambda.raw()[k] = L.raw()[k].v;
  out.loss = loss.v;
  return out;
}

void adam_step(NetworkWeights& W, const NetworkWeights& grad, AdamState& st) {
  if (grad.w.size() != W.w.size() || st.m.size() != W.w.size() ||
      st.v.size() != W.w.size())
    throw ConfigError("adam_step: shape mismatch");
  ++st.t;
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.t));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.t));
  for (std::size_t i = 0; i < W.w.size(); ++i) {
    st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * grad.w[i];
    st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * grad.w[i] * grad.w[i];
    W.w[i] -= st.lr * (st.m[i] / c1) / (std::sqrt(st.v[i] / c2) + st.eps);
  }
}

namespace {

void put_u64(std::ofstream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::ifstream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void save_weights(const std::string& path, const NetworkWeights& W) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write weights to " + path);
  out.write("ODMW", 4);
  put_u64(out, W.J);
  put_u64(out, W.H);
  for (double x : W.w) put_u64(out, std::bit_cast<std::uint64_t>(x));
  if (!out) throw ConfigError("short write to " + path);
}

NetworkWeights load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open weights file " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "ODMW", 4) != 0)
    throw ConfigError(path + ": not a weights checkpoint");
  const std::uint64_t J = get_u64(in), H = get_u64(in);
  if (!in || J < 1 || H < 1 || J > (1u << 20) || H > (1u << 20))
    throw ConfigError(path + ": bad checkpoint header");
  NetworkWeights W(static_cast<std::size_t>(J), static_cast<std::size_t>(H));
  for (double& x : W.w) {
    x = std::bit_cast<double>(get_u64(in));
    if (!in) throw ConfigError(path + ": truncated checkpoint");
  }
  return W;
}

}  // namespace odm
