#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "cmha/geometry.hpp"
#include "cmha/tensor.hpp"

namespace cmha {

struct CircleLossConfig {
  double delta_p = 0.1;
  double delta_n = 1.4;
  double gamma = 10.0;
  // Superpoint pairs with overlap above this are positives; exactly zero
  // overlap marks a negative.
  double positive_overlap_min = 0.10;

  void validate() const;
  bool operator==(const CircleLossConfig&) const = default;
};

// Overlap-aware circle loss on superpoint features, averaged over the two
// matching directions. Per anchor i (a row with at least one positive):
//   log[1 + sum_pos exp(lambda_ij b_p (d_ij - delta_p))
//         * sum_neg exp(b_n (delta_n - d_ik))]
// with lambda_ij = sqrt(o_ij), b_p = gamma (d - delta_p)_+ and
// b_n = gamma (delta_n - d)_+. The weights b are differentiated through, so
// the exponents are gamma (d - delta_p)_+^2 and gamma (delta_n - d)_+^2.
struct CircleLossResult {
  double value = 0.0;
  Matrix grad_dist;  // dL / d d_ij, N_P x N_Q
  Matrix grad_src;   // dL / dF^P (feature overload only)
  Matrix grad_tgt;   // dL / dF^Q (feature overload only)
  std::size_t src_anchors = 0;
  std::size_t tgt_anchors = 0;
};

// From a precomputed distance matrix. overlaps and dist are N_P x N_Q.
// Throws Error("empty anchor set").
CircleLossResult circle_loss_from_distances(const Matrix& dist, const Matrix& overlaps,
                                            const CircleLossConfig& cfg);

// d_ij = |F^P_i - F^Q_j|_2, then the loss above, with feature gradients.
CircleLossResult coarse_circle_loss(const Matrix& src_feats, const Matrix& tgt_feats,
                                    const Matrix& overlaps, const CircleLossConfig& cfg);

Matrix pairwise_distances(const Matrix& a, const Matrix& b);

// Ground truth for one patch of the fine loss, in patch-local indices:
// matched pairs M, unmatched source rows I, unmatched target columns J.
struct FinePatchSupervision {
  std::vector<std::pair<std::size_t, std::size_t>> matched;
  std::vector<std::size_t> unmatched_src;
  std::vector<std::size_t> unmatched_tgt;
};

// Pairs of group members within `radius` of each other under gt; members
// with no partner go to I / J.
FinePatchSupervision fine_supervision(std::span<const Vec3> src, std::span<const Vec3> tgt,
                                      std::span<const std::size_t> src_group,
                                      std::span<const std::size_t> tgt_group,
                                      const RigidTransform& gt, double radius);

enum class FineLossNormalization {
  kPatchCount,      // divide by the number of patches g
  kSupervisedCount  // divide by the total number of supervised entries
};

struct FineLossResult {
  double value = 0.0;
  std::vector<Matrix> grad_z;  // dL / dZ_i, same shapes as the inputs
};

// L_f,i = -sum_M log Z[x,y] - sum_I log Z[x, dustbin] - sum_J log Z[dustbin, y],
// L_f = sum_i L_f,i / N. Throws Error("zero probability at supervised
// entry").
FineLossResult fine_matching_loss(std::span<const Matrix> z_list,
                                  std::span<const FinePatchSupervision> gt,
                                  FineLossNormalization norm = FineLossNormalization::kPatchCount);

struct ContrastiveResult {
  double value = 0.0;
  Matrix grad_s;    // dL / ds, N x N
  Matrix grad_geo;  // dL / dF^P (feature overload only)
  Matrix grad_img;  // dL / dF^I (feature overload only)
};

// -1/N sum_i log softmax_j(s_ij)[i], i.e. cross-entropy with the diagonal as
// the positive.
ContrastiveResult contrastive_from_similarity(const Matrix& s);

// s_ij = <F^P_i, F^I_j> / sqrt(d), then the loss above.
ContrastiveResult cross_modal_contrastive(const Matrix& geo_feats, const Matrix& img_feats);

struct LossReport {
  double l_c = 0.0;
  double l_f = 0.0;
  double l_cmc = 0.0;
  double total = 0.0;
  double lambda_weight = 0.5;
};

LossReport total_loss(double l_c, double l_f, double l_cmc, double lambda_weight = 0.5);

}  // namespace cmha
