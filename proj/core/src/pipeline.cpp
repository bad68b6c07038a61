#include "cmha/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <tuple>
#include <utility>

#include "cmha/error.hpp"
#include "cmha/parallel.hpp"

namespace cmha {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Runs fn, rethrowing any library error tagged with the stage name.
template <typename Fn>
auto stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

ImagePatches zeroed(const ImagePatches& img) {
  return {Matrix(img.features.rows(), img.features.cols()), img.pixels};
}

}  // namespace

void PipelineConfig::validate() const {
  stack.validate();
  if (stack.embedding.d != stack.d) throw Error("embedding width must equal stack width");
  matching.validate();
  estimation.validate();
  circle.validate();
  if (!(lambda_weight >= 0.0)) throw Error("lambda must be >= 0");
  if (frontend.n_superpoints < 1) throw Error("n_superpoints must be >= 1");
  if (frontend.image_rows < 2 || frontend.image_cols < 2)
    throw Error("image grid must be at least 2x2");
  if (!(frontend.focal > 0.0)) throw Error("focal must be positive");
  if (!(metrics.rr_threshold > 0.0) || !(metrics.inlier_radius > 0.0))
    throw Error("metric thresholds must be positive");
  if (!(metrics.fmr_threshold >= 0.0 && metrics.fmr_threshold <= 1.0))
    throw Error("fmr_threshold must lie in [0, 1]");
}

HybridWeights pipeline_weights(const PipelineConfig& cfg) {
  return init_hybrid_weights(cfg.stack, cfg.seed);
}

PreparedCloud prepare_cloud(const PointCloud& cloud, const PipelineConfig& cfg) {
  return stage("grouping", [&] {
    PreparedCloud out;
    out.cloud = cloud;
    if (!out.cloud.features) out.cloud.features = synth_features(cloud.points, cfg.stack.d, 0.0, 0);
    if (out.cloud.features->cols() != cfg.stack.d)
      throw Error("descriptor width does not match the stack width");
    out.super = build_superpoints(out.cloud.points, *out.cloud.features,
                                  cfg.frontend.n_superpoints);
    const ImageGridConfig grid{cfg.frontend.image_rows, cfg.frontend.image_cols,
                               cfg.frontend.focal};
    out.image = synth_image_grid(out.cloud.points, *out.cloud.features, grid);
    return out;
  });
}

RegistrationResult register_pair(const PreparedCloud& src, const PreparedCloud& tgt,
                                 const PipelineConfig& cfg, const HybridWeights& weights,
                                 std::size_t workers) {
  cfg.validate();
  if (!src.cloud.features || !tgt.cloud.features) throw StageError("grouping", "missing descriptors");
  const auto start = Clock::now();
  RegistrationResult res;

  Matrix src_feats = src.super.features;
  Matrix tgt_feats = tgt.super.features;
  if (cfg.use_hybrid_stack) {
    auto [s_ctx, t_ctx] = stage("embedding", [&] {
      if (weights.d != cfg.stack.d || weights.n_iters() != cfg.stack.n_iters)
        throw Error("weights do not match the stack config");
      const ImagePatches s_img = cfg.use_image_features ? src.image : zeroed(src.image);
      const ImagePatches t_img = cfg.use_image_features ? tgt.image : zeroed(tgt.image);
      return std::pair{make_cloud_context(src.super, s_img, cfg.stack, weights.geo),
                       make_cloud_context(tgt.super, t_img, cfg.stack, weights.geo)};
    });
    stage("hybrid_stack", [&] {
      for (const auto& it : weights.iterations) hybrid_iteration(s_ctx, t_ctx, it);
      return 0;
    });
    src_feats = std::move(s_ctx.feats);
    tgt_feats = std::move(t_ctx.feats);
  }

  const double norm = cfg.matching.feature_norm;
  if (norm > 0.0) {
    src_feats = normalize_rows(src_feats, norm);
    tgt_feats = normalize_rows(tgt_feats, norm);
  }
  const Matrix s_bar = stage("similarity", [&] {
    return dustbin_augment(feature_similarity(src_feats, tgt_feats), cfg.matching.dustbin_logit);
  });
  const AssignmentMatrix z = stage("sinkhorn", [&] { return sinkhorn(s_bar, cfg.matching.l_iters); });
  res.sinkhorn_row_residual = z.row_residual;
  res.sinkhorn_col_residual = z.col_residual;
  res.coarse = stage("topk", [&] { return topk_select(z, cfg.matching.k_coarse); });
  DenseMatches dense = stage("dense_refine", [&] {
    if (norm > 0.0)
      return dense_refine(res.coarse, src.super, tgt.super,
                          normalize_rows(*src.cloud.features, norm),
                          normalize_rows(*tgt.cloud.features, norm), cfg.matching, workers);
    return dense_refine(res.coarse, src.super, tgt.super, *src.cloud.features,
                        *tgt.cloud.features, cfg.matching, workers);
  });
  res.timings.model = seconds_since(start);

  const auto pose_start = Clock::now();
  const LocalTransforms local = stage("local_transforms", [&] {
    return local_transforms(dense.per_patch, src.cloud.points, tgt.cloud.points, cfg.estimation);
  });
  res.skipped_patches = local.skipped;
  res.selection = stage("lgr_select", [&] {
    return lgr_select(local.candidates, dense.merged, src.cloud.points, tgt.cloud.points,
                      cfg.estimation, workers);
  });
  res.transform = res.selection.transform;
  res.dense = std::move(dense.merged);
  res.timings.pose = seconds_since(pose_start);
  res.timings.total = seconds_since(start);
  return res;
}

RegistrationResult register_pair(const PointCloud& src, const PointCloud& tgt,
                                 const PipelineConfig& cfg, const HybridWeights& weights,
                                 std::size_t workers) {
  cfg.validate();
  const auto start = Clock::now();
  PointCloud a = src, b = tgt;
  if (!a.features && !b.features) {
    stage("grouping", [&] {
      std::tie(a.features, b.features) = synth_pair_features(a.points, b.points, cfg.stack.d);
      return 0;
    });
  }
  const PreparedCloud s = prepare_cloud(a, cfg);
  const PreparedCloud t = prepare_cloud(b, cfg);
  const double prep = seconds_since(start);
  RegistrationResult res = register_pair(s, t, cfg, weights, workers);
  res.timings.model += prep;
  res.timings.total += prep;
  return res;
}

RegistrationResult register_pair(const PointCloud& src, const PointCloud& tgt,
                                 const PipelineConfig& cfg, std::size_t workers) {
  return register_pair(src, tgt, cfg, pipeline_weights(cfg), workers);
}

RegistrationResult register_scene(const SyntheticScene& scene, const PipelineConfig& cfg,
                                  const HybridWeights& weights, std::size_t workers) {
  const PreparedCloud s{scene.src, scene.src_super, scene.src_img};
  const PreparedCloud t{scene.tgt, scene.tgt_super, scene.tgt_img};
  return register_pair(s, t, cfg, weights, workers);
}

MetricsReport evaluate_pair(const SyntheticScene& scene, const RigidTransform& predicted,
                            const CorrespondenceSet& dense, const CorrespondenceSet& coarse,
                            const MetricsConfig& cfg) {
  MetricsReport m;
  const TransformErrors err = transform_errors(predicted, scene.gt);
  m.rre = err.rre_deg;
  m.rte = err.rte;
  m.rmse = correspondence_rmse(scene.gt_correspondences, scene.src.points, scene.tgt.points,
                               predicted);
  m.rr = m.rmse < cfg.rr_threshold ? 1.0 : 0.0;
  const InlierRatio ir = correspondence_inlier_ratio(dense, scene.src.points, scene.tgt.points,
                                                     scene.gt, cfg.inlier_radius);
  m.inlier_ratio = ir.ratio;
  m.fmr = !ir.empty_input && ir.ratio >= cfg.fmr_threshold ? 1.0 : 0.0;
  if (!coarse.pairs.empty()) {
    std::size_t hits = 0;
    for (const Correspondence& c : coarse.pairs) {
      if (c.src >= scene.overlap_table.rows() || c.tgt >= scene.overlap_table.cols())
        throw Error("coarse pair index outside the overlap table");
      if (scene.overlap_table(c.src, c.tgt) > 0.0) ++hits;
    }
    m.pir = static_cast<double>(hits) / static_cast<double>(coarse.pairs.size());
  }
  return m;
}

void RunReport::aggregate() {
  rr = fmr = inlier_ratio = mean_rre = mean_rte = 0.0;
  timings = {};
  if (pairs.empty()) return;
  std::size_t registered = 0;
  for (const PairEntry& p : pairs) {
    rr += p.metrics.rr;
    fmr += p.metrics.fmr;
    inlier_ratio += p.metrics.inlier_ratio;
    if (p.metrics.rr > 0.0) {
      mean_rre += p.metrics.rre;
      mean_rte += p.metrics.rte;
      ++registered;
    }
    timings.model += p.timings.model;
    timings.pose += p.timings.pose;
    timings.total += p.timings.total;
  }
  const auto n = static_cast<double>(pairs.size());
  rr /= n;
  fmr /= n;
  inlier_ratio /= n;
  if (registered > 0) {
    mean_rre /= static_cast<double>(registered);
    mean_rte /= static_cast<double>(registered);
  }
}

RunReport run_batch(std::span<const SyntheticScene> scenes, const PipelineConfig& cfg,
                    std::size_t workers) {
  cfg.validate();
  const HybridWeights weights = pipeline_weights(cfg);
  RunReport report;
  report.config = cfg;
  report.pairs.resize(scenes.size());
  // A pipeline failure on one pair counts as a failed registration.
  parallel_for(scenes.size(), workers, [&](std::size_t i) {
    PairEntry& e = report.pairs[i];
    e.name = "pair_" + std::to_string(i);
    try {
      const RegistrationResult r = register_scene(scenes[i], cfg, weights, 1);
      e.metrics = evaluate_pair(scenes[i], r.transform, r.dense, r.coarse, cfg.metrics);
      e.timings = r.timings;
    } catch (const StageError&) {
      e.metrics = evaluate_pair(scenes[i], RigidTransform::identity(), {}, {}, cfg.metrics);
    }
  });
  report.aggregate();
  return report;
}

}  // namespace cmha
