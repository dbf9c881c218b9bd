#include <benchmark/benchmark.h>

#include <cstdint>
#include <utility>
#include <vector>

#include <odm/constraints.hpp>
#include <odm/engine.hpp>
#include <odm/markov_basis.hpp>
#include <odm/neural.hpp>
#include <odm/rng.hpp>
#include <odm/sim.hpp>
#include <odm/table.hpp>
#include <odm/table_sampler.hpp>

using namespace odm;

namespace {

Cost random_cost(std::size_t I, std::size_t J, std::uint64_t seed) {
  Cost c(I, J);
  Rng rng(seed);
  for (double& v : c.raw()) v = 1.0 - rng.uniform01();
  return c;
}

std::vector<double> random_x(std::size_t J, std::uint64_t seed) {
  std::vector<double> x(J);
  Rng rng(seed);
  for (double& v : x) v = rng.uniform01() - 0.5;
  return x;
}

void BM_intensity_total(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Cost cost = random_cost(n, n, 1);
  const std::vector<double> x = random_x(n, 2);
  const SIMParams p{0.8, 0.6, {}};
  for (auto _ : state)
    benchmark::DoNotOptimize(intensity_total(x, p, cost, 1e4));
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(n * n));
}

void BM_closed_form_rows(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Synthetic syn = generate_synthetic(n, n, 8LL * n * n, 3);
  ConstraintSet C;
  C.row_sums = summary_statistics(syn.truth).rows;
  Rng rng(4);
  for (auto _ : state)
    benchmark::DoNotOptimize(sample_closed_form(syn.lambda, C, rng));
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(n * n));
}

void BM_gibbs_step(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Synthetic syn = generate_synthetic(n, n, 8LL * n * n, 5);
  const Margins m = summary_statistics(syn.truth);
  ConstraintSet C;
  C.row_sums = m.rows;
  C.col_sums = m.cols;
  ChainState st = make_chain(syn.truth, C, syn.lambda, 6);
  for (auto _ : state) {
    gibbs_mb_step(st);
    benchmark::DoNotOptimize(st.T.raw().data());
  }
}

// refreshed intensity + one move: the per-iteration table cost inside the engine
void BM_gibbs_refresh_step(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Synthetic syn = generate_synthetic(n, n, 8LL * n * n, 5);
  const Margins m = summary_statistics(syn.truth);
  ConstraintSet C;
  C.row_sums = m.rows;
  C.col_sums = m.cols;
  ChainState st = make_chain(syn.truth, C, syn.lambda, 6);
  for (auto _ : state) {
    gibbs_mb_step(st, syn.lambda);
    benchmark::DoNotOptimize(st.T.raw().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(n * n));
}

void BM_pipeline_grad(benchmark::State& state) {
  const auto J = static_cast<std::size_t>(state.range(0));
  const std::size_t I = J;
  const Cost cost = random_cost(I, J, 7);
  const std::vector<double> y = random_x(J, 8);

  Observed data;
  data.y = y;
  LossConfig lc;
  lc.sigma_d = default_sigma_d(J);

  CalibPipeline ctx;
  ctx.model = IntensityModel::TOTAL;
  ctx.cost = &cost;
  ctx.lambda_total = 1e4;
  ctx.hw = HWParams{1.0, compute_kappa(1e4, 0.0, y), 0.0, 0.0};
  ctx.dt = 0.001;
  ctx.tau = 1;
  ctx.x0 = y;
  ctx.noise.resize(J, 0.0);

  Rng rng(9);
  NetworkWeights W = nn_init(rng, J, 20);
  for (auto _ : state)
    benchmark::DoNotOptimize(loss_grad(lc, W, data, ctx, nullptr));
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(I * J));
}

}  // namespace

BENCHMARK(BM_intensity_total)->Arg(50)->Arg(200)->Arg(500);
BENCHMARK(BM_closed_form_rows)->Arg(50)->Arg(200)->Arg(500);
BENCHMARK(BM_gibbs_step)->Arg(50)->Arg(200)->Arg(500);
BENCHMARK(BM_gibbs_refresh_step)->Arg(50)->Arg(200)->Arg(500);
BENCHMARK(BM_pipeline_grad)->Arg(20)->Arg(100)->Arg(300);

BENCHMARK_MAIN();
