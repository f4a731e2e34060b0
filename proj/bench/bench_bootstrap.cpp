// Serial reference vs OpenMP bootstrap on the bundled 10x10 triangle.

#include <cstdlib>
#include <string>

#include <benchmark/benchmark.h>

#include "lossres/bootstrap.hpp"

namespace {

const lossres::Triangle& triangle() {
  static const lossres::Triangle t = [] {
    const char* env = std::getenv("LOSSRES_TRIANGLE");
    return lossres::read_triangle_file(env ? env : LOSSRES_TRIANGLE_DEFAULT);
  }();
  return t;
}

lossres::BootstrapConfig config(const benchmark::State& state) {
  lossres::BootstrapConfig cfg;
  cfg.replicates = 200;
  cfg.seed = 1;
  cfg.model.kind = state.range(0) == 0 ? lossres::ModelKind::glm : lossres::ModelKind::hglm;
  cfg.threads = static_cast<int>(state.range(1));
  return cfg;
}

void BM_Serial(benchmark::State& state) {
  const auto cfg = config(state);
  for (auto _ : state) benchmark::DoNotOptimize(lossres::bootstrap_run_serial(triangle(), cfg));
  state.SetItemsProcessed(state.iterations() * cfg.replicates);
}

void BM_OpenMP(benchmark::State& state) {
  const auto cfg = config(state);
  for (auto _ : state) benchmark::DoNotOptimize(lossres::bootstrap_run(triangle(), cfg));
  state.SetItemsProcessed(state.iterations() * cfg.replicates);
}

}  // namespace

// Args: {model (0 glm, 1 hglm), threads}.
BENCHMARK(BM_Serial)->Args({0, 1})->Args({1, 1})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_OpenMP)
    ->ArgsProduct({{0, 1}, {1, 2, 4}})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

BENCHMARK_MAIN();
