#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cmha/embedding.hpp"
#include "cmha/geometry.hpp"
#include "cmha/tensor.hpp"

namespace cmha {

enum class AttentionKind { kSelf, kAggregation, kCross };

// Single-head attention layer. d_k equals the projection width.
struct AttentionLayer {
  ProjectionSet proj;
  AttentionKind kind = AttentionKind::kSelf;

  std::size_t d_k() const noexcept { return proj.dim(); }
};

// Geometric self-attention scores
//   e_ij = (F_i W_q) . (F_j W_k + E_ij W_g) / sqrt(d_k).
Matrix self_attention_scores(const Matrix& feats, const PairEmbedding& pair_emb,
                             const AttentionLayer& layer);

// softmax_j(e_ij) weighted sum of F_j W_v, plus the input (residual).
Matrix self_attention(const Matrix& feats, const PairEmbedding& pair_emb,
                      const AttentionLayer& layer);

// Superpoints (queries) attend to image patches (keys/values):
//   e_ij = (F^P_i W_q + E^P_i W_g) . (F^I_j W_k + E^I_j W_f) / sqrt(d_k),
// output = softmax_j(e) (F^I W_v) + F^P. Throws Error("no image patches").
Matrix aggregation_attention(const Matrix& point_feats, const Matrix& image_feats,
                             const Matrix& point_pos_emb,
                             const Matrix& image_pos_emb,
                             const AttentionLayer& layer);

// Source queries attend to target keys/values, both sides carrying their
// positional embedding through W_g:
//   e_ij = (F^P_i W_q + E^P_i W_g) . (F^Q_j W_k + E^Q_j W_g) / sqrt(d_k),
// output = softmax_j(e) (F^Q W_v) + F^P.
Matrix cross_attention(const Matrix& src_feats, const Matrix& tgt_feats,
                       const Matrix& src_pos, const Matrix& tgt_pos,
                       const AttentionLayer& layer);

// Image patches seen by one cloud's camera.
struct ImagePatches {
  Matrix features;  // M x d
  Matrix pixels;    // M x 2, cell centers in pixels
};

struct HybridStackConfig {
  std::size_t n_iters = 3;
  std::size_t d = 24;
  EmbeddingConfig embedding;
  // Length scales of the absolute position encodings.
  double position_scale = 1.0;  // meters, superpoint coordinates
  double pixel_scale = 100.0;   // pixels, image-patch centers

  void validate() const;
  bool operator==(const HybridStackConfig&) const = default;
};

struct IterationWeights {
  AttentionLayer self;
  AttentionLayer aggregation;
  AttentionLayer cross;
};

// All weights of a stack. The geometric embedding map is shared by every
// iteration, so pair embeddings are computed once per cloud.
struct HybridWeights {
  std::size_t d = 0;
  std::uint64_t seed = 0;
  GeoEmbeddingWeights geo;
  std::vector<IterationWeights> iterations;

  std::size_t n_iters() const noexcept { return iterations.size(); }
};

HybridWeights init_hybrid_weights(const HybridStackConfig& cfg, std::uint64_t seed);
// Every matrix set to zero (the stack becomes the identity map).
HybridWeights zero_hybrid_weights(const HybridStackConfig& cfg);

// JSON snapshot: header {d, n_iters, seed} plus every matrix as
// {rows, cols, data}. Doubles are written in shortest round-trip form, so a
// load reproduces every bit.
void save_weights(const std::string& path, const HybridWeights& w);
HybridWeights load_weights(const std::string& path);
std::string weights_to_json(const HybridWeights& w);
HybridWeights weights_from_json(const std::string& text);

// Everything the stack needs for one cloud, precomputed.
struct CloudContext {
  Matrix feats;          // N x d, updated by each iteration
  PairEmbedding pair_emb;
  Matrix pos_emb;        // N x d absolute embedding of centered coords
  Matrix image_feats;    // M x d
  Matrix image_pos_emb;  // M x d
};

CloudContext make_cloud_context(const SuperpointSet& sp, const ImagePatches& img,
                                const HybridStackConfig& cfg,
                                const GeoEmbeddingWeights& geo);

// One self -> aggregation -> cross round, updating both clouds' features.
// Cross-attention uses the pre-cross features of both clouds.
void hybrid_iteration(CloudContext& src, CloudContext& tgt,
                      const IterationWeights& w);

struct HybridOutput {
  Matrix src;
  Matrix tgt;
};

HybridOutput hybrid_stack(const SuperpointSet& src, const SuperpointSet& tgt,
                          const ImagePatches& src_img, const ImagePatches& tgt_img,
                          const HybridStackConfig& cfg, const HybridWeights& w);

}  // namespace cmha
