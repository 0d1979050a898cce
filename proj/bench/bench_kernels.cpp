// Parallel kernels against their serial references.

#include <benchmark/benchmark.h>

#include "roughmc/experiments.hpp"
#include "roughmc/smoothing.hpp"
#include "roughmc/spectral.hpp"

using namespace roughmc;

namespace {

SamplerConfig rwm(double sigma) {
  SamplerConfig c;
  c.method = Method::RWM;
  c.sigma = sigma;
  c.beta = 5.0;
  return c;
}

void discretize(benchmark::State& state, bool parallel) {
  const auto v = PotentialSpec::separable_rough(SmoothKind::Harmonic, 1, 0x1p-4);
  const Grid1D grid{-3.0, 3.0, static_cast<std::size_t>(state.range(0))};
  const auto cfg = rwm(0.4);
  for (auto _ : state) {
    auto t = parallel ? discretize_kernel(cfg, v, grid) : discretize_kernel_serial(cfg, v, grid);
    benchmark::DoNotOptimize(t.entries.data());
  }
}

SweepConfig bench_sweep() {
  return SweepConfig::from_json(nlohmann::json::parse(R"({
    "schema_version": 1, "methods": ["RWM", "MALA"],
    "potential": {"kind": "separable_rough", "smooth": "harmonic"},
    "beta": 5, "dims": [10], "eps": [0.015625],
    "sigma": {"mode": "log_range", "lo": 0.01, "hi": 1, "count": 8},
    "steps": 20000, "master_seed": 1
  })"));
}

void sweep(benchmark::State& state, bool parallel) {
  const SweepConfig cfg = bench_sweep();
  for (auto _ : state) {
    auto r = parallel ? run_sigma_sweep(cfg) : run_sigma_sweep_serial(cfg);
    benchmark::DoNotOptimize(r.data());
  }
}

void entropy_gradient(benchmark::State& state, bool parallel) {
  const auto v = draw_random_multiscale(10, 3);
  LocalEntropyConfig cfg;
  cfg.samples = static_cast<std::size_t>(state.range(0));
  const double x[1] = {0.1};
  Rng rng(5);
  for (auto _ : state) {
    auto g = parallel ? local_entropy_gradient(v, x, cfg, rng)
                      : local_entropy_gradient_serial(v, x, cfg, rng);
    benchmark::DoNotOptimize(g.gradient.data());
  }
}

}  // namespace

BENCHMARK_CAPTURE(discretize, parallel, true)->Arg(512)->Arg(2048)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(discretize, serial, false)->Arg(512)->Arg(2048)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(sweep, parallel, true)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(sweep, serial, false)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(entropy_gradient, parallel, true)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(entropy_gradient, serial, false)->Arg(1000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
