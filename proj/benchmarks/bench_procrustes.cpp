#include <benchmark/benchmark.h>

#include <vector>

#include "cmha/estimation.hpp"
#include "cmha/synth.hpp"

namespace {

void BM_WeightedProcrustes(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  cmha::Xorshift64Star rng(3);
  cmha::RigidTransform gt;
  gt.rotation = cmha::random_rotation(rng);
  std::vector<cmha::Vec3> src(n), tgt(n);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    src[i] = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    tgt[i] = gt.apply(src[i]);
    w[i] = rng.uniform(0.1, 1.0);
  }
  for (auto _ : state) benchmark::DoNotOptimize(cmha::weighted_procrustes(src, tgt, w));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_WeightedProcrustes)->RangeMultiplier(4)->Range(16, 4096);

}  // namespace

BENCHMARK_MAIN();
