#include "cmha/attention.hpp"

#include <cmath>

#include "cmha/error.hpp"
#include "cmha/rng.hpp"

namespace cmha {

namespace {

void require_width(const Matrix& m, std::size_t d, const char* what) {
  if (m.cols() != d) {
    throw Error(std::string(what) + " has width " + std::to_string(m.cols()) +
                ", expected " + std::to_string(d));
  }
}

// softmax(scores) * values + residual
Matrix attend(const Matrix& scores, const Matrix& values, const Matrix& residual) {
  return add(matmul(softmax_rows(scores), values), residual);
}

}  // namespace

Matrix self_attention_scores(const Matrix& feats, const PairEmbedding& pair_emb,
                             const AttentionLayer& layer) {
  const std::size_t n = feats.rows();
  const std::size_t d = layer.d_k();
  require_width(feats, d, "features");
  if (pair_emb.n() != n || pair_emb.d() != d) {
    throw Error("pair embedding is " + std::to_string(pair_emb.n()) + "x" +
                std::to_string(pair_emb.n()) + "x" + std::to_string(pair_emb.d()) +
                ", features are " + std::to_string(n) + "x" + std::to_string(d));
  }
  const Matrix q = matmul(feats, layer.proj.w_q);
  const Matrix k = matmul(feats, layer.proj.w_k);
  // q_i . (E_ij W_g) == (q_i W_g^T) . E_ij
  const Matrix qg = matmul_transposed(q, layer.proj.w_g);
  Matrix e = matmul_transposed(q, k);
  const double inv = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t i = 0; i < n; ++i) {
    const auto qgi = qg.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const auto eij = pair_emb.at(i, j);
      double geo = 0.0;
      for (std::size_t c = 0; c < d; ++c) geo += qgi[c] * eij[c];
      e(i, j) = (e(i, j) + geo) * inv;
    }
  }
  return e;
}

Matrix self_attention(const Matrix& feats, const PairEmbedding& pair_emb,
                      const AttentionLayer& layer) {
  const Matrix e = self_attention_scores(feats, pair_emb, layer);
  return attend(e, matmul(feats, layer.proj.w_v), feats);
}

Matrix aggregation_attention(const Matrix& point_feats, const Matrix& image_feats,
                             const Matrix& point_pos_emb,
                             const Matrix& image_pos_emb,
                             const AttentionLayer& layer) {
  const std::size_t d = layer.d_k();
  if (image_feats.rows() == 0) throw Error("no image patches");
  require_width(point_feats, d, "point features");
  require_width(image_feats, d, "image features");
  require_width(point_pos_emb, d, "point position embedding");
  require_width(image_pos_emb, d, "image position embedding");
  if (point_pos_emb.rows() != point_feats.rows() ||
      image_pos_emb.rows() != image_feats.rows())
    throw Error("position embedding row count mismatch");
  const Matrix q = add(matmul(point_feats, layer.proj.w_q),
                       matmul(point_pos_emb, layer.proj.w_g));
  const Matrix k = add(matmul(image_feats, layer.proj.w_k),
                       matmul(image_pos_emb, layer.proj.w_f));
  const Matrix e = scale(matmul_transposed(q, k), 1.0 / std::sqrt(static_cast<double>(d)));
  return attend(e, matmul(image_feats, layer.proj.w_v), point_feats);
}

Matrix cross_attention(const Matrix& src_feats, const Matrix& tgt_feats,
                       const Matrix& src_pos, const Matrix& tgt_pos,
                       const AttentionLayer& layer) {
  const std::size_t d = layer.d_k();
  if (tgt_feats.rows() == 0) throw Error("empty target");
  require_width(src_feats, d, "source features");
  require_width(tgt_feats, d, "target features");
  require_width(src_pos, d, "source position embedding");
  require_width(tgt_pos, d, "target position embedding");
  if (src_pos.rows() != src_feats.rows() || tgt_pos.rows() != tgt_feats.rows())
    throw Error("position embedding row count mismatch");
  const Matrix q = add(matmul(src_feats, layer.proj.w_q), matmul(src_pos, layer.proj.w_g));
  const Matrix k = add(matmul(tgt_feats, layer.proj.w_k), matmul(tgt_pos, layer.proj.w_g));
  const Matrix e = scale(matmul_transposed(q, k), 1.0 / std::sqrt(static_cast<double>(d)));
  return attend(e, matmul(tgt_feats, layer.proj.w_v), src_feats);
}

void HybridStackConfig::validate() const {
  if (n_iters < 1) throw Error("n_iters must be >= 1");
  if (d != embedding.d) throw Error("stack width must equal embedding width");
  embedding.validate();
  if (!(position_scale > 0.0) || !(pixel_scale > 0.0))
    throw Error("position scales must be positive");
}

HybridWeights init_hybrid_weights(const HybridStackConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  HybridWeights w;
  w.d = cfg.d;
  w.seed = seed;
  w.geo = init_geo_weights(cfg.d, derive_seed(seed, 0));
  for (std::size_t it = 0; it < cfg.n_iters; ++it) {
    IterationWeights iw;
    iw.self = {init_projections(cfg.d, derive_seed(seed, 3 * it + 1)), AttentionKind::kSelf};
    iw.aggregation = {init_projections(cfg.d, derive_seed(seed, 3 * it + 2)),
                      AttentionKind::kAggregation};
    iw.cross = {init_projections(cfg.d, derive_seed(seed, 3 * it + 3)), AttentionKind::kCross};
    w.iterations.push_back(std::move(iw));
  }
  return w;
}

HybridWeights zero_hybrid_weights(const HybridStackConfig& cfg) {
  HybridWeights w = init_hybrid_weights(cfg, 0);
  auto zero = [](Matrix& m) { m = Matrix(m.rows(), m.cols()); };
  zero(w.geo.w_hidden);
  zero(w.geo.w_d);
  zero(w.geo.w_a);
  for (auto& it : w.iterations) {
    for (AttentionLayer* l : {&it.self, &it.aggregation, &it.cross}) {
      zero(l->proj.w_q);
      zero(l->proj.w_k);
      zero(l->proj.w_v);
      zero(l->proj.w_g);
      zero(l->proj.w_f);
    }
  }
  return w;
}

CloudContext make_cloud_context(const SuperpointSet& sp, const ImagePatches& img,
                                const HybridStackConfig& cfg,
                                const GeoEmbeddingWeights& geo) {
  cfg.validate();
  require_width(sp.features, cfg.d, "superpoint features");
  if (sp.features.rows() != sp.size()) throw Error("superpoint feature rows mismatch");
  require_width(img.features, cfg.d, "image features");
  if (img.pixels.cols() != 2 || img.pixels.rows() != img.features.rows())
    throw Error("image pixel coordinates must be M x 2");

  CloudContext ctx;
  ctx.feats = sp.features;
  ctx.pair_emb = pair_geometric_embedding(sp.coords, cfg.embedding, geo);
  const Vec3 c = centroid(sp.coords);
  Matrix centered(sp.size(), 3);
  for (std::size_t i = 0; i < sp.size(); ++i) {
    const Vec3 p = sp.coords[i] - c;
    centered(i, 0) = p.x;
    centered(i, 1) = p.y;
    centered(i, 2) = p.z;
  }
  ctx.pos_emb = absolute_position_embedding(centered, cfg.d, cfg.position_scale);
  ctx.image_feats = img.features;
  ctx.image_pos_emb = absolute_position_embedding(img.pixels, cfg.d, cfg.pixel_scale);
  return ctx;
}

void hybrid_iteration(CloudContext& src, CloudContext& tgt, const IterationWeights& w) {
  src.feats = self_attention(src.feats, src.pair_emb, w.self);
  tgt.feats = self_attention(tgt.feats, tgt.pair_emb, w.self);
  src.feats = aggregation_attention(src.feats, src.image_feats, src.pos_emb,
                                    src.image_pos_emb, w.aggregation);
  tgt.feats = aggregation_attention(tgt.feats, tgt.image_feats, tgt.pos_emb,
                                    tgt.image_pos_emb, w.aggregation);
  Matrix src_next = cross_attention(src.feats, tgt.feats, src.pos_emb, tgt.pos_emb, w.cross);
  Matrix tgt_next = cross_attention(tgt.feats, src.feats, tgt.pos_emb, src.pos_emb, w.cross);
  src.feats = std::move(src_next);
  tgt.feats = std::move(tgt_next);
}

HybridOutput hybrid_stack(const SuperpointSet& src, const SuperpointSet& tgt,
                          const ImagePatches& src_img, const ImagePatches& tgt_img,
                          const HybridStackConfig& cfg, const HybridWeights& w) {
  if (w.d != cfg.d) throw Error("weights width does not match stack width");
  if (w.n_iters() != cfg.n_iters) throw Error("weights iteration count does not match config");
  CloudContext s = make_cloud_context(src, src_img, cfg, w.geo);
  CloudContext t = make_cloud_context(tgt, tgt_img, cfg, w.geo);
  for (const auto& it : w.iterations) hybrid_iteration(s, t, it);
  return {std::move(s.feats), std::move(t.feats)};
}

}  // namespace cmha
