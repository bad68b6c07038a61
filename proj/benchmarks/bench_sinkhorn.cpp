#include <benchmark/benchmark.h>

#include "cmha/matching.hpp"
#include "cmha/rng.hpp"

namespace {

cmha::Matrix random_scores(std::size_t n, std::uint64_t seed) {
  cmha::Xorshift64Star rng(seed);
  cmha::Matrix s(n, n);
  for (double& v : s.data()) v = rng.uniform(-3.0, 3.0);
  return cmha::dustbin_augment(s, 0.0);
}

void BM_Sinkhorn(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const cmha::Matrix s = random_scores(n, 1);
  for (auto _ : state) benchmark::DoNotOptimize(cmha::sinkhorn(s, 50));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Sinkhorn)->RangeMultiplier(2)->Range(16, 256)->Complexity(benchmark::oNSquared);

void BM_TopK(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const cmha::AssignmentMatrix z = cmha::sinkhorn(random_scores(n, 2), 50);
  for (auto _ : state) benchmark::DoNotOptimize(cmha::topk_select(z, 256));
}
BENCHMARK(BM_TopK)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
