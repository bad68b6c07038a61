#include "cmha/estimation.hpp"

#include <cmath>

#include "cmha/error.hpp"
#include "cmha/parallel.hpp"
#include "cmha/tensor.hpp"

namespace cmha {

void EstimationConfig::validate() const {
  if (!(tau_a > 0.0)) throw Error("tau_a must be positive");
  if (min_pairs < 3) throw Error("min_pairs must be >= 3");
}

RigidTransform weighted_procrustes(std::span<const Vec3> src, std::span<const Vec3> tgt,
                                   std::span<const double> weights,
                                   std::size_t min_pairs) {
  if (src.size() != tgt.size() || src.size() != weights.size())
    throw Error("procrustes input size mismatch");
  if (src.size() < min_pairs) {
    throw Error("need at least " + std::to_string(min_pairs) + " pairs, got " +
                std::to_string(src.size()));
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error("weights must be finite and >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw Error("total weight must be positive");

  Vec3 ps{}, qs{};
  for (std::size_t j = 0; j < src.size(); ++j) {
    ps += src[j] * weights[j];
    qs += tgt[j] * weights[j];
  }
  const Vec3 pbar = ps * (1.0 / total);
  const Vec3 qbar = qs * (1.0 / total);

  Mat3 h{};
  for (std::size_t j = 0; j < src.size(); ++j) {
    const Vec3 p = src[j] - pbar;
    const Vec3 q = tgt[j] - qbar;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) h[a][b] += weights[j] * p[a] * q[b];
  }
  const Svd3 svd = svd3(h);
  if (!(svd.sigma[0] > 0.0) || svd.sigma[1] <= 1e-10 * svd.sigma[0])
    throw Error("degenerate patch");

  // R = V diag(1, 1, det(V U^T)) U^T
  const Mat3 vut = mat3_mul(svd.v, mat3_transpose(svd.u));
  const double sign = mat3_det(vut) < 0.0 ? -1.0 : 1.0;
  Mat3 v = svd.v;
  for (int i = 0; i < 3; ++i) v[i][2] *= sign;
  RigidTransform out;
  out.rotation = mat3_mul(v, mat3_transpose(svd.u));
  out.translation = qbar - mat3_apply(out.rotation, pbar);
  return out;
}

RigidTransform weighted_procrustes(const CorrespondenceSet& corrs,
                                   std::span<const Vec3> src, std::span<const Vec3> tgt,
                                   std::size_t min_pairs) {
  std::vector<Vec3> p, q;
  std::vector<double> w;
  p.reserve(corrs.size());
  q.reserve(corrs.size());
  w.reserve(corrs.size());
  for (const auto& c : corrs.pairs) {
    if (c.src >= src.size() || c.tgt >= tgt.size())
      throw Error("correspondence index out of range");
    p.push_back(src[c.src]);
    q.push_back(tgt[c.tgt]);
    w.push_back(c.confidence);
  }
  return weighted_procrustes(p, q, w, min_pairs);
}

double weighted_residual(const RigidTransform& t, std::span<const Vec3> src,
                         std::span<const Vec3> tgt, std::span<const double> weights) {
  double acc = 0.0;
  for (std::size_t j = 0; j < src.size(); ++j)
    acc += weights[j] * squared_distance(t.apply(src[j]), tgt[j]);
  return acc;
}

LocalTransforms local_transforms(std::span<const CorrespondenceSet> patches,
                                 std::span<const Vec3> src, std::span<const Vec3> tgt,
                                 const EstimationConfig& cfg) {
  cfg.validate();
  LocalTransforms out;
  for (std::size_t p = 0; p < patches.size(); ++p) {
    try {
      out.candidates.push_back(
          {weighted_procrustes(patches[p], src, tgt, cfg.min_pairs), p, 0});
    } catch (const Error& e) {
      out.skipped.push_back("patch " + std::to_string(p) + ": " + e.what());
    }
  }
  if (out.candidates.empty()) throw Error("no local candidates");
  return out;
}

std::size_t count_inliers(const RigidTransform& t, const CorrespondenceSet& corrs,
                          std::span<const Vec3> src, std::span<const Vec3> tgt,
                          double tau) {
  const double tau2 = tau * tau;
  std::size_t n = 0;
  for (const auto& c : corrs.pairs) {
    if (squared_distance(t.apply(src[c.src]), tgt[c.tgt]) < tau2) ++n;
  }
  return n;
}

LgrResult lgr_select(std::span<const LocalCandidate> candidates, const CorrespondenceSet& all,
                     std::span<const Vec3> src, std::span<const Vec3> tgt,
                     const EstimationConfig& cfg, std::size_t workers) {
  cfg.validate();
  if (candidates.empty()) throw Error("no local candidates");
  for (const auto& c : all.pairs)
    if (c.src >= src.size() || c.tgt >= tgt.size())
      throw Error("correspondence index out of range");

  LgrResult out;
  out.candidate_inliers.resize(candidates.size());
  parallel_for(candidates.size(), workers, [&](std::size_t i) {
    out.candidate_inliers[i] = count_inliers(candidates[i].transform, all, src, tgt, cfg.tau_a);
  });
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (out.candidate_inliers[i] > out.candidate_inliers[out.winner]) out.winner = i;
  }
  out.transform = candidates[out.winner].transform;
  out.winner_inliers = out.candidate_inliers[out.winner];
  out.final_inliers = out.winner_inliers;

  const double tau2 = cfg.tau_a * cfg.tau_a;
  for (std::size_t round = 0; round < cfg.refit_iterations; ++round) {
    CorrespondenceSet inliers;
    for (const auto& c : all.pairs) {
      if (squared_distance(out.transform.apply(src[c.src]), tgt[c.tgt]) < tau2)
        inliers.pairs.push_back(c);
    }
    RigidTransform refit;
    try {
      refit = weighted_procrustes(inliers, src, tgt, cfg.min_pairs);
    } catch (const Error&) {
      break;
    }
    const std::size_t n = count_inliers(refit, all, src, tgt, cfg.tau_a);
    if (n < out.final_inliers) break;
    out.transform = refit;
    out.final_inliers = n;
  }
  return out;
}

}  // namespace cmha
