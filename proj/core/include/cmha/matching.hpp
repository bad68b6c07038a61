#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cmha/correspondence.hpp"
#include "cmha/geometry.hpp"
#include "cmha/tensor.hpp"

namespace cmha {

struct MatchingConfig {
  std::size_t k_coarse = 256;
  std::size_t k_dense = 5;
  std::size_t l_iters = 50;
  double dustbin_logit = 0.0;
  // Rows are rescaled to this norm before similarity; 0 keeps them as is.
  // Without it the raw dot product favors long vectors over aligned ones.
  double feature_norm = 10.0;

  void validate() const;
  bool operator==(const MatchingConfig&) const = default;
};

// S(m, n) = <F_m, F_n> / sqrt(d); pairs listed in `mask` are set to -inf.
Matrix feature_similarity(
    const Matrix& src, const Matrix& tgt,
    std::span<const std::pair<std::size_t, std::size_t>> mask = {});

// Rows rescaled to norm `target`; zero rows stay zero.
Matrix normalize_rows(const Matrix& m, double target);

// [[S, z 1], [z 1^T, z]]: one extra row and column holding the dustbin
// logit.
Matrix dustbin_augment(const Matrix& s, double z);

// Sinkhorn-normalized dustbin-augmented matrix. The last row and column are
// the dustbins; only the other rows and columns are normalized to unit sum.
struct AssignmentMatrix {
  Matrix z;
  double dustbin_logit = 0.0;
  // max |sum - 1| over non-dustbin rows / columns after the last iteration.
  double row_residual = 0.0;
  double col_residual = 0.0;

  std::size_t src_count() const noexcept { return z.rows() - 1; }
  std::size_t tgt_count() const noexcept { return z.cols() - 1; }
};

// Exponentiates the max-shifted scores and runs `l_iters` rounds of
// row-then-column normalization. Real rows and columns are scaled to sum 1;
// the dustbin row is scaled to the target count and the dustbin column to the
// source count, unless it is closed (no mass).
// Throws Error("degenerate scores") if a non-dustbin row or column has no
// mass.
AssignmentMatrix sinkhorn(const Matrix& s_bar, std::size_t l_iters);

// The k largest non-dustbin entries of Z as (i, j, Z_ij), confidence
// descending with (i, j) ascending on ties. k is capped at N_P * N_Q.
CorrespondenceSet topk_select(const AssignmentMatrix& z, std::size_t k);

struct DenseMatches {
  // Union over patches, one entry per (src, tgt) at its best confidence.
  CorrespondenceSet merged;
  // Raw top-k output of each coarse pair, indexed like the coarse set.
  std::vector<CorrespondenceSet> per_patch;
  // Coarse pairs dropped because a group was empty.
  std::size_t empty_patches = 0;
};

// Point-level refinement inside each coarse superpoint pair: dense
// similarity over the two groups, dustbin, Sinkhorn, top-k_dense. Indices in
// the output are global dense indices. Patches run on up to `workers`
// threads; the merge is order-independent.
DenseMatches dense_refine(const CorrespondenceSet& coarse,
                          const SuperpointSet& src_sp, const SuperpointSet& tgt_sp,
                          const Matrix& src_dense_feats, const Matrix& tgt_dense_feats,
                          const MatchingConfig& cfg, std::size_t workers = 1);

}  // namespace cmha
