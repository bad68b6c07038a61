#include <benchmark/benchmark.h>

#include "cmha/attention.hpp"
#include "cmha/synth.hpp"

namespace {

void BM_HybridStack(benchmark::State& state) {
  cmha::SceneConfig sc;
  sc.n_points = 1500;
  sc.n_superpoints = static_cast<std::size_t>(state.range(0));
  sc.seed = 5;
  const cmha::SyntheticScene scene = cmha::generate_scene(sc);
  const cmha::HybridStackConfig cfg;
  const cmha::HybridWeights w = cmha::init_hybrid_weights(cfg, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        cmha::hybrid_stack(scene.src_super, scene.tgt_super, scene.src_img, scene.tgt_img, cfg, w));
  }
}
BENCHMARK(BM_HybridStack)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_PairEmbedding(benchmark::State& state) {
  cmha::Xorshift64Star rng(6);
  std::vector<cmha::Vec3> pts(static_cast<std::size_t>(state.range(0)));
  for (auto& p : pts) p = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
  const cmha::EmbeddingConfig cfg;
  const cmha::GeoEmbeddingWeights w = cmha::init_geo_weights(cfg.d, 0);
  for (auto _ : state) benchmark::DoNotOptimize(cmha::pair_geometric_embedding(pts, cfg, w));
}
BENCHMARK(BM_PairEmbedding)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
