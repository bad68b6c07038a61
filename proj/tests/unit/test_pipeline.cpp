#include <cmath>

#include "cmha/error.hpp"
#include "cmha/pipeline.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace cmha;

namespace {

SceneConfig scene_config(std::uint64_t seed, double overlap = 0.6) {
  SceneConfig cfg;
  cfg.n_points = 800;
  cfg.n_superpoints = 32;
  cfg.overlap_fraction = overlap;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("PipelineConfig validation") {
  PipelineConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.stack.d = 7;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.matching.l_iters = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("register_scene recovers the transform") {
  const SyntheticScene scene = generate_scene(scene_config(1));
  const PipelineConfig cfg;
  const HybridWeights w = pipeline_weights(cfg);
  const RegistrationResult r = register_scene(scene, cfg, w);
  const MetricsReport m = evaluate_pair(scene, r.transform, r.dense, r.coarse, cfg.metrics);
  CHECK(m.rr == 1.0);
  CHECK(m.rre < 1.0);
  CHECK(m.rte < 0.05);
  CHECK(m.inlier_ratio > 0.05);
  CHECK(m.pir > 0.0);
  CHECK(r.transform.is_valid());
  CHECK(std::isfinite(r.sinkhorn_row_residual));
  CHECK(r.sinkhorn_col_residual <= 1e-12);
  CHECK(is_canonical(r.dense));
  CHECK(r.timings.total >= r.timings.model);

  // Same inputs and a different worker count give identical output.
  const RegistrationResult again = register_scene(scene, cfg, w, 3);
  CHECK(again.transform == r.transform);
  CHECK(again.dense.pairs == r.dense.pairs);
}

TEST_CASE("coarse sinkhorn residual is reported and shrinks with more iterations") {
  const SyntheticScene scene = generate_scene(scene_config(1));
  PipelineConfig cfg;
  cfg.matching.l_iters = 2000;
  const RegistrationResult r = register_scene(scene, cfg, pipeline_weights(cfg));
  CHECK(r.sinkhorn_row_residual <= 1e-6);
  CHECK(r.sinkhorn_col_residual <= 1e-12);
}

TEST_CASE("evaluate_pair") {
  const SyntheticScene scene = generate_scene(scene_config(2));
  const MetricsConfig mc;
  const MetricsReport exact = evaluate_pair(scene, scene.gt, scene.gt_correspondences, {}, mc);
  CHECK(exact.rre == 0.0);
  CHECK(exact.rte == 0.0);
  CHECK(exact.rr == 1.0);
  CHECK(exact.inlier_ratio == 1.0);
  CHECK(exact.fmr == 1.0);
  CHECK(exact.is_valid());

  const MetricsReport wrong = evaluate_pair(scene, RigidTransform::identity(), {}, {}, mc);
  CHECK(wrong.fmr == 0.0);
  CHECK(wrong.inlier_ratio == 0.0);

  CorrespondenceSet bad_coarse;
  bad_coarse.pairs = {{999, 0, 1.0}};
  CHECK_THROWS_AS(evaluate_pair(scene, scene.gt, {}, bad_coarse, mc), Error);
}

TEST_CASE("register_pair on raw clouds builds descriptors jointly") {
  const SyntheticScene scene = generate_scene(scene_config(3, 0.8));
  const PointCloud src{scene.src.points, std::nullopt};
  const PointCloud tgt{scene.tgt.points, std::nullopt};
  PipelineConfig cfg;
  cfg.frontend.n_superpoints = 32;
  const RegistrationResult r = register_pair(src, tgt, cfg);
  CHECK(r.transform.is_valid());
  CHECK(transform_errors(r.transform, scene.gt).rre_deg < 5.0);
}

TEST_CASE("ablation switches run and stay deterministic") {
  const SyntheticScene scene = generate_scene(scene_config(4));
  for (bool stack : {true, false})
    for (bool image : {true, false}) {
      PipelineConfig cfg;
      cfg.use_hybrid_stack = stack;
      cfg.use_image_features = image;
      const HybridWeights w = pipeline_weights(cfg);
      const RegistrationResult a = register_scene(scene, cfg, w);
      const RegistrationResult b = register_scene(scene, cfg, w);
      CHECK(a.transform == b.transform);
    }
}

TEST_CASE("pipeline failures name the stage") {
  SyntheticScene scene = generate_scene(scene_config(5));
  PipelineConfig cfg;
  scene.tgt.features.reset();
  try {
    register_scene(scene, cfg, pipeline_weights(cfg));
    FAIL("expected a StageError");
  } catch (const StageError& e) {
    CHECK(e.stage() == "grouping");
  }

  // Mismatched weights are caught before the stack runs.
  const SyntheticScene ok = generate_scene(scene_config(5));
  HybridStackConfig other = cfg.stack;
  other.n_iters = 1;
  try {
    register_scene(ok, cfg, init_hybrid_weights(other, 0));
    FAIL("expected a StageError");
  } catch (const StageError& e) {
    CHECK(e.stage() == "embedding");
  }
}

TEST_CASE("run_batch keeps scene order and aggregates") {
  std::vector<SyntheticScene> scenes;
  for (std::uint64_t s = 10; s < 13; ++s) scenes.push_back(generate_scene(scene_config(s)));
  const PipelineConfig cfg;
  const RunReport a = run_batch(scenes, cfg, 2);
  const RunReport b = run_batch(scenes, cfg, 1);
  REQUIRE(a.pairs.size() == 3);
  CHECK(a.pairs[2].name == "pair_2");
  for (std::size_t i = 0; i < 3; ++i) CHECK(a.pairs[i].metrics.rre == b.pairs[i].metrics.rre);
  CHECK(a.rr == b.rr);
  CHECK(a.rr >= 2.0 / 3.0);
  CHECK(a.config == cfg);
}
