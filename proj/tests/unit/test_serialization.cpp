#include <filesystem>

#include "cmha/error.hpp"
#include "cmha/pipeline.hpp"
#include "cmha/serialization.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace cmha;

TEST_CASE("transform JSON round trip is bit-exact") {
  Xorshift64Star rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const RigidTransform t = test::random_transform(rng, 10.0);
    CHECK(transform_from_json(transform_to_json(t)) == t);
  }
  const RigidTransform id = transform_from_json(
      R"({"rotation": [1, 0, 0, 0, 1, 0, 0, 0, 1], "translation": [0.5, 0, -1]})");
  CHECK(id.rotation == mat3_identity());
  CHECK(id.translation == Vec3{0.5, 0, -1});
  CHECK_THROWS_AS(transform_from_json(R"({"rotation": [1, 0, 0], "translation": [0, 0, 0]})"), Error);
  CHECK_THROWS_AS(transform_from_json("not json"), Error);
}

TEST_CASE("scene config JSON") {
  SceneConfig cfg;
  cfg.overlap_fraction = 0.1 + 0.2;
  cfg.seed = 0xFFFFFFFFFFFFull;
  cfg.feature_noise_sigma = 1e-17;
  CHECK(scene_config_from_json(scene_config_to_json(cfg)) == cfg);
  const SceneConfig partial = scene_config_from_json(R"({"n_points": 900})");
  CHECK(partial.n_points == 900);
  CHECK(partial.n_superpoints == SceneConfig{}.n_superpoints);
  CHECK_THROWS_WITH_AS(scene_config_from_json(R"({"n_pionts": 900})"),
                       doctest::Contains("unknown key 'n_pionts'"), Error);
  CHECK_THROWS_AS(scene_config_from_json(R"({"n_points": "many"})"), Error);
  CHECK_THROWS_AS(scene_config_from_json("[1, 2]"), Error);
}

TEST_CASE("pipeline config JSON") {
  PipelineConfig cfg;
  cfg.matching.k_coarse = 64;
  cfg.matching.k_dense = 3;
  cfg.matching.feature_norm = 7.5;
  cfg.estimation.refit_iterations = 0;
  cfg.use_image_features = false;
  cfg.lambda_weight = 0.25;
  cfg.stack.n_iters = 2;
  cfg.metrics.rr_threshold = 0.1;
  CHECK(pipeline_config_from_json(pipeline_config_to_json(cfg)) == cfg);

  const PipelineConfig partial = pipeline_config_from_json(R"({"matching": {"k_dense": 7}})");
  CHECK(partial.matching.k_dense == 7);
  CHECK(partial.matching.k_coarse == MatchingConfig{}.k_coarse);
  CHECK(partial.stack == HybridStackConfig{});

  // Stack width carries over to the embedding.
  CHECK(pipeline_config_from_json(R"({"stack": {"d": 16}})").stack.embedding.d == 16);

  CHECK_THROWS_WITH_AS(pipeline_config_from_json(R"({"matching": {"topk": 3}})"),
                       doctest::Contains("unknown key 'topk' in matching"), Error);
  CHECK_THROWS_AS(pipeline_config_from_json(R"({"typo": 1})"), Error);
  CHECK_THROWS_AS(pipeline_config_from_json(R"({"stack": 3})"), Error);
}

TEST_CASE("run report JSON round trip") {
  RunReport r;
  r.pairs.push_back({"scene_0000", MetricsReport{0.1, 0.02, 0.03, 0.4, 1.0, 1.0, 0.5}, {1.0, 0.5, 1.5}});
  r.pairs.push_back({"scene_0001", MetricsReport{12.0, 0.5, 0.9, 0.01, 0.0, 0.0, 0.1}, {1.0, 0.5, 1.5}});
  r.aggregate();
  CHECK(r.rr == 0.5);
  CHECK(r.mean_rre == doctest::Approx(0.1));
  CHECK(r.inlier_ratio == doctest::Approx(0.205));
  CHECK(r.timings.total == doctest::Approx(3.0));

  const RunReport back = run_report_from_json(run_report_to_json(r));
  REQUIRE(back.pairs.size() == 2);
  CHECK(back.pairs[1].name == "scene_0001");
  CHECK(back.pairs[1].metrics.rre == 12.0);
  CHECK(back.rr == r.rr);
  CHECK(back.mean_rre == r.mean_rre);
  CHECK(back.version == kVersion);
  CHECK(run_report_to_json(back) == run_report_to_json(r));
}

TEST_CASE("metrics and loss JSON") {
  const std::string m = metrics_to_json(MetricsReport{1, 2, 3, 0.5, 1, 1, 0.25});
  CHECK(m.find("\"rre\": 1.0") != std::string::npos);
  CHECK(m.find("\"pir\": 0.25") != std::string::npos);
  const std::string l = loss_report_to_json(total_loss(1.0, 2.0, 4.0));
  CHECK(l.find("\"total\": 5.0") != std::string::npos);
}

TEST_CASE("text file helpers") {
  const auto path = std::filesystem::temp_directory_path() / "cmha_unit_text.json";
  write_text_file(path.string(), "{}\n");
  CHECK(read_text_file(path.string()) == "{}\n");
  std::filesystem::remove(path);
  CHECK_THROWS_WITH_AS(read_text_file(path.string()), doctest::Contains("cannot read"), Error);
  CHECK_THROWS_WITH_AS(write_text_file("/nonexistent/dir/x.json", "x"), doctest::Contains("cannot write"),
                       Error);
}

TEST_CASE("weights file round trip") {
  HybridStackConfig cfg;
  cfg.n_iters = 1;
  const HybridWeights w = init_hybrid_weights(cfg, 3);
  const auto path = std::filesystem::temp_directory_path() / "cmha_unit_weights.json";
  save_weights(path.string(), w);
  const HybridWeights back = load_weights(path.string());
  CHECK(back.iterations[0].self.proj.w_q == w.iterations[0].self.proj.w_q);
  CHECK(back.geo.w_hidden == w.geo.w_hidden);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_weights(path.string()), Error);
}
