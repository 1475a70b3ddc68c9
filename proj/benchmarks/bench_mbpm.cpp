#include <benchmark/benchmark.h>

#include "bq/disentangle.hpp"
#include "bq/mbpm.hpp"
#include "bq/synthetic.hpp"

namespace {

bq::Shape shape_from(const benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  return bq::Shape{static_cast<std::size_t>(state.range(1)), 3, side, side};
}

void set_counters(benchmark::State& state, const bq::Shape& shape, std::size_t k) {
  const auto macs = bq::count_macs(bq::MbpmParams::init(shape.c, 1.1, k, 3), shape);
  state.counters["MACs"] = static_cast<double>(macs);
  state.counters["frames/s"] =
      benchmark::Counter(static_cast<double>(shape.t), benchmark::Counter::kIsIterationInvariantRate);
}

void BM_Separable(benchmark::State& state) {
  const auto shape = shape_from(state);
  const auto k = static_cast<std::size_t>(state.range(2));
  const auto clip = bq::synthetic::random_clip(shape, 1);
  const auto params = bq::MbpmParams::init(3, 1.1, k, 3);
  for (auto _ : state) benchmark::DoNotOptimize(bq::mbpm_forward(clip, params));
  set_counters(state, shape, k);
}

void BM_Direct(benchmark::State& state) {
  const auto shape = shape_from(state);
  const auto k = static_cast<std::size_t>(state.range(2));
  const auto clip = bq::synthetic::random_clip(shape, 1);
  for (auto _ : state) benchmark::DoNotOptimize(bq::bandpass_direct(clip, 1.1, k, 3));
  set_counters(state, shape, k);
}

void BM_Disentangle(benchmark::State& state) {
  const auto shape = shape_from(state);
  const auto clip = bq::synthetic::random_clip(shape, 2);
  bq::DisentangleConfig config;
  config.quiet_h = shape.h * 160 / 224;
  config.quiet_w = shape.w * 160 / 224;
  const auto params = bq::busy_params(config, 3);
  for (auto _ : state) benchmark::DoNotOptimize(bq::disentangle(clip, config, params));
  set_counters(state, shape, config.k);
}

void shapes(benchmark::internal::Benchmark* b) {
  for (long side : {64, 112, 224}) {
    for (long k : {3, 7, 9}) b->Args({side, 24, k});
  }
  b->ArgNames({"side", "t", "k"})->Unit(benchmark::kMillisecond);
}

}  // namespace

BENCHMARK(BM_Separable)->Apply(shapes);
BENCHMARK(BM_Direct)->Apply(shapes);
BENCHMARK(BM_Disentangle)->Args({224, 24, 9})->ArgNames({"side", "t", "k"})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
