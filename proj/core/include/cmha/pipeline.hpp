#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cmha/attention.hpp"
#include "cmha/correspondence.hpp"
#include "cmha/estimation.hpp"
#include "cmha/geometry.hpp"
#include "cmha/losses.hpp"
#include "cmha/matching.hpp"
#include "cmha/metrics.hpp"
#include "cmha/synth.hpp"

namespace cmha {

inline constexpr const char* kVersion = "0.1.0";

// How raw clouds are turned into superpoints, descriptors and image grids.
struct FrontendConfig {
  std::size_t n_superpoints = 64;
  std::size_t image_rows = 8;
  std::size_t image_cols = 8;
  double focal = 500.0;

  bool operator==(const FrontendConfig&) const = default;
};

struct MetricsConfig {
  double rr_threshold = 0.2;    // RMSE below this counts as registered
  double inlier_radius = 0.1;   // meters, for IR
  double fmr_threshold = 0.05;  // IR at or above this counts as matched

  bool operator==(const MetricsConfig&) const = default;
};

struct PipelineConfig {
  HybridStackConfig stack;
  MatchingConfig matching;
  EstimationConfig estimation;
  CircleLossConfig circle;
  double lambda_weight = 0.5;
  FrontendConfig frontend;
  MetricsConfig metrics;
  std::uint64_t seed = 0;  // weight initialization
  // Ablation switches.
  bool use_hybrid_stack = true;
  bool use_image_features = true;

  void validate() const;
  bool operator==(const PipelineConfig&) const = default;
};

struct StageTimings {
  double model = 0.0;  // seconds: grouping through dense refinement
  double pose = 0.0;   // seconds: local transforms and selection
  double total = 0.0;
};

// Everything the stack consumes for one cloud.
struct PreparedCloud {
  PointCloud cloud;  // features always present
  SuperpointSet super;
  ImagePatches image;
};

// Fills in descriptors when the cloud carries none, then builds superpoints
// and the image grid.
PreparedCloud prepare_cloud(const PointCloud& cloud, const PipelineConfig& cfg);

struct RegistrationResult {
  RigidTransform transform;
  CorrespondenceSet coarse;
  CorrespondenceSet dense;
  LgrResult selection;
  std::vector<std::string> skipped_patches;
  double sinkhorn_row_residual = 0.0;
  double sinkhorn_col_residual = 0.0;
  StageTimings timings;
};

// grouping -> embedding -> hybrid_stack -> similarity -> sinkhorn -> topk ->
// dense_refine -> local_transforms -> lgr_select. Failures surface as
// StageError naming the stage.
RegistrationResult register_pair(const PreparedCloud& src, const PreparedCloud& tgt,
                                 const PipelineConfig& cfg, const HybridWeights& weights,
                                 std::size_t workers = 1);
// When both clouds lack descriptors they get a pair computed together
// (synth_pair_features), so one whitening serves both sides.
RegistrationResult register_pair(const PointCloud& src, const PointCloud& tgt,
                                 const PipelineConfig& cfg, const HybridWeights& weights,
                                 std::size_t workers = 1);
RegistrationResult register_pair(const PointCloud& src, const PointCloud& tgt,
                                 const PipelineConfig& cfg, std::size_t workers = 1);
// Uses the scene's own superpoints and image grids.
RegistrationResult register_scene(const SyntheticScene& scene, const PipelineConfig& cfg,
                                  const HybridWeights& weights, std::size_t workers = 1);

HybridWeights pipeline_weights(const PipelineConfig& cfg);

// Metrics of a predicted transform against a scene. `dense` feeds IR/FMR and
// `coarse` feeds PIR; either may be empty.
MetricsReport evaluate_pair(const SyntheticScene& scene, const RigidTransform& predicted,
                            const CorrespondenceSet& dense, const CorrespondenceSet& coarse,
                            const MetricsConfig& cfg);

struct PairEntry {
  std::string name;
  MetricsReport metrics;
  StageTimings timings;
};

struct RunReport {
  std::string version = kVersion;
  PipelineConfig config;
  std::vector<PairEntry> pairs;
  double rr = 0.0;
  double fmr = 0.0;
  double inlier_ratio = 0.0;
  // Over registered pairs only; a failed pair's error is arbitrary.
  double mean_rre = 0.0;
  double mean_rte = 0.0;
  StageTimings timings;  // summed over pairs

  // Recomputes the aggregates from the per-pair entries.
  void aggregate();
};

// Registers and evaluates every scene, pairs in parallel; the report keeps
// scene order. Names default to "pair_<i>".
RunReport run_batch(std::span<const SyntheticScene> scenes, const PipelineConfig& cfg,
                    std::size_t workers = 1);

}  // namespace cmha
