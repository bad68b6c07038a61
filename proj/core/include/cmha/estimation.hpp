#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cmha/correspondence.hpp"
#include "cmha/geometry.hpp"

namespace cmha {

struct EstimationConfig {
  double tau_a = 0.05;  // meters
  std::size_t min_pairs = 3;
  // Re-fit rounds on the winner's inliers after selection. 0 gives the bare
  // argmax over local candidates.
  std::size_t refit_iterations = 3;

  void validate() const;
  bool operator==(const EstimationConfig&) const = default;
};

// argmin_{R,t} sum_j w_j |R p_j + t - q_j|^2 in closed form (weighted
// centroids, SVD of the cross-covariance, reflection-corrected).
// Throws Error on fewer than min_pairs pairs, nonpositive total weight or
// rank(H) < 2 ("degenerate patch").
RigidTransform weighted_procrustes(std::span<const Vec3> src, std::span<const Vec3> tgt,
                                   std::span<const double> weights,
                                   std::size_t min_pairs = 3);

// Convenience overload over a correspondence set, weighting by confidence.
RigidTransform weighted_procrustes(const CorrespondenceSet& corrs,
                                   std::span<const Vec3> src, std::span<const Vec3> tgt,
                                   std::size_t min_pairs = 3);

// sum_j w_j |R p_j + t - q_j|^2
double weighted_residual(const RigidTransform& t, std::span<const Vec3> src,
                         std::span<const Vec3> tgt, std::span<const double> weights);

struct LocalCandidate {
  RigidTransform transform;
  std::size_t source_patch = 0;
  std::size_t inlier_count = 0;
};

struct LocalTransforms {
  std::vector<LocalCandidate> candidates;
  // One line per skipped patch ("patch 7: degenerate patch").
  std::vector<std::string> skipped;
};

// One weighted Procrustes fit per patch. Patches that fail (too few pairs,
// degenerate geometry) are skipped and reported. Throws
// Error("no local candidates") when nothing survives.
LocalTransforms local_transforms(std::span<const CorrespondenceSet> patches,
                                 std::span<const Vec3> src, std::span<const Vec3> tgt,
                                 const EstimationConfig& cfg);

// Number of pairs with |R p + t - q| < tau.
std::size_t count_inliers(const RigidTransform& t, const CorrespondenceSet& corrs,
                          std::span<const Vec3> src, std::span<const Vec3> tgt,
                          double tau);

struct LgrResult {
  RigidTransform transform;
  std::size_t winner = 0;          // index into the candidate list
  std::size_t winner_inliers = 0;  // before re-fit
  std::size_t final_inliers = 0;   // after re-fit (>= winner_inliers)
  std::vector<std::size_t> candidate_inliers;
};

// Picks the candidate with the most inliers over `all` (lowest index on
// ties), then re-fits on that candidate's inliers. A re-fit that would
// lower the inlier count is discarded.
LgrResult lgr_select(std::span<const LocalCandidate> candidates, const CorrespondenceSet& all,
                     std::span<const Vec3> src, std::span<const Vec3> tgt,
                     const EstimationConfig& cfg, std::size_t workers = 1);

}  // namespace cmha
