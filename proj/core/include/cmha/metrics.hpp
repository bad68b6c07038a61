#pragma once

#include <cstddef>
#include <span>

#include "cmha/correspondence.hpp"
#include "cmha/geometry.hpp"

namespace cmha {

struct InlierRatio {
  double ratio = 0.0;
  // Set when the correspondence set was empty; the ratio is then 0.
  bool empty_input = false;
};

// Fraction of pairs with |R p + t - q| < radius under `gt`.
InlierRatio correspondence_inlier_ratio(const CorrespondenceSet& corrs,
                                        std::span<const Vec3> src,
                                        std::span<const Vec3> tgt,
                                        const RigidTransform& gt,
                                        double radius);

// Root mean square of |T p - q| over the given pairs. Zero for no pairs.
double correspondence_rmse(const CorrespondenceSet& corrs,
                           std::span<const Vec3> src,
                           std::span<const Vec3> tgt,
                           const RigidTransform& transform);

// Per-pair registration metrics. fmr / rr are 0-or-1 success indicators for
// a single pair and become recall fractions once averaged over a batch.
struct MetricsReport {
  double rre = 0.0;           // degrees
  double rte = 0.0;           // meters
  double rmse = 0.0;          // meters
  double inlier_ratio = 0.0;  // fraction
  double fmr = 0.0;           // fraction
  double rr = 0.0;            // fraction
  double pir = 0.0;           // fraction

  bool is_valid() const;
};

}  // namespace cmha
