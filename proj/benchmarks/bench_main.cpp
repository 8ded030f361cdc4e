#include <random>

#include <benchmark/benchmark.h>

#include "uavsim/baselines.hpp"
#include "uavsim/config.hpp"
#include "uavsim/neural.hpp"
#include "uavsim/routing.hpp"
#include "uavsim/sac.hpp"

using namespace uavsim;

namespace {

Scenario desk(int tasks, std::uint64_t seed = 0) {
  auto c = profile_config("desk");
  c.tasks = tasks;
  return generate_scenario(c, seed);
}

}  // namespace

static void BM_EnvStep(benchmark::State& state) {
  Env env(desk(static_cast<int>(state.range(0))));
  std::mt19937_64 rng(1);
  env.reset(0);
  for (auto _ : state) {
    if (env.done()) {
      state.PauseTiming();
      env.reset(0);
      state.ResumeTiming();
    }
    benchmark::DoNotOptimize(env.step(random_actions(env, rng)));
  }
}
BENCHMARK(BM_EnvStep)->Arg(20)->Arg(40);

static void BM_MlpForwardBackward(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  const Mlp net({150, width, width, 20}, 3);
  const Matrix x = Matrix::Random(150, 64);
  const Matrix up = Matrix::Random(20, 64);
  MlpGrads g = net.zero_grads();
  for (auto _ : state) {
    Mlp::Cache cache;
    const Matrix y = net.forward_batch(x, cache);
    benchmark::DoNotOptimize(net.backward(cache, up, g));
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_MlpForwardBackward)->Arg(64)->Arg(128);

static void BM_SolveExact(benchmark::State& state) {
  const auto sc = desk(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(solve_exact(sc));
}
BENCHMARK(BM_SolveExact)->DenseRange(4, 8, 2)->Unit(benchmark::kMillisecond);

static void BM_Ga(benchmark::State& state) {
  const auto sc = desk(static_cast<int>(state.range(0)));
  GaConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(ga_allocate(sc, cfg));
}
BENCHMARK(BM_Ga)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
