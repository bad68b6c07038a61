#include "cmha/metrics.hpp"

#include <cmath>

#include "cmha/error.hpp"

namespace cmha {

InlierRatio correspondence_inlier_ratio(const CorrespondenceSet& corrs,
                                        std::span<const Vec3> src,
                                        std::span<const Vec3> tgt,
                                        const RigidTransform& gt,
                                        double radius) {
  if (!(radius > 0.0)) throw Error("inlier radius must be positive");
  InlierRatio out;
  if (corrs.empty()) {
    out.empty_input = true;
    return out;
  }
  const double r2 = radius * radius;
  std::size_t hits = 0;
  for (const auto& c : corrs.pairs) {
    if (c.src >= src.size() || c.tgt >= tgt.size())
      throw Error("correspondence index out of range");
    if (squared_distance(gt.apply(src[c.src]), tgt[c.tgt]) < r2) ++hits;
  }
  out.ratio = static_cast<double>(hits) / static_cast<double>(corrs.size());
  return out;
}

double correspondence_rmse(const CorrespondenceSet& corrs,
                           std::span<const Vec3> src,
                           std::span<const Vec3> tgt,
                           const RigidTransform& transform) {
  if (corrs.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& c : corrs.pairs) {
    if (c.src >= src.size() || c.tgt >= tgt.size())
      throw Error("correspondence index out of range");
    acc += squared_distance(transform.apply(src[c.src]), tgt[c.tgt]);
  }
  return std::sqrt(acc / static_cast<double>(corrs.size()));
}

bool MetricsReport::is_valid() const {
  auto frac = [](double v) { return v >= 0.0 && v <= 1.0; };
  return rre >= 0.0 && rte >= 0.0 && rmse >= 0.0 && frac(inlier_ratio) &&
         frac(fmr) && frac(rr) && frac(pir);
}

}  // namespace cmha
