#include <benchmark/benchmark.h>

#include "cmha/parallel.hpp"
#include "cmha/pipeline.hpp"

namespace {

void BM_RegisterScene(benchmark::State& state) {
  cmha::SceneConfig sc;
  sc.seed = 9;
  sc.overlap_fraction = 0.5;
  const cmha::SyntheticScene scene = cmha::generate_scene(sc);
  cmha::PipelineConfig cfg;
  cfg.use_hybrid_stack = state.range(0) != 0;
  const cmha::HybridWeights w = cmha::pipeline_weights(cfg);
  for (auto _ : state) benchmark::DoNotOptimize(cmha::register_scene(scene, cfg, w, 1));
  state.SetLabel(cfg.use_hybrid_stack ? "stack" : "no stack");
}
BENCHMARK(BM_RegisterScene)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

void BM_GenerateScene(benchmark::State& state) {
  cmha::SceneConfig sc;
  sc.overlap_fraction = 0.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cmha::generate_scene(sc));
    ++sc.seed;
  }
}
BENCHMARK(BM_GenerateScene)->Unit(benchmark::kMillisecond);

void BM_RunBatch(benchmark::State& state) {
  std::vector<cmha::SyntheticScene> scenes;
  for (std::uint64_t s = 0; s < 8; ++s) {
    cmha::SceneConfig sc;
    sc.seed = 100 + s;
    sc.overlap_fraction = 0.5;
    scenes.push_back(cmha::generate_scene(sc));
  }
  const cmha::PipelineConfig cfg;
  const auto workers = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(cmha::run_batch(scenes, cfg, workers));
}
BENCHMARK(BM_RunBatch)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
