#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace cmha {

enum class CorrespondenceLevel { kCoarse, kDense };

inline constexpr std::size_t kNoPatch = std::numeric_limits<std::size_t>::max();

struct Correspondence {
  std::size_t src = 0;
  std::size_t tgt = 0;
  double confidence = 0.0;
  // Index of the coarse pair this dense match came from (kNoPatch for
  // coarse matches or imported sets).
  std::size_t patch = kNoPatch;

  bool operator==(const Correspondence&) const = default;
};

struct CorrespondenceSet {
  std::vector<Correspondence> pairs;
  CorrespondenceLevel level = CorrespondenceLevel::kCoarse;

  std::size_t size() const noexcept { return pairs.size(); }
  bool empty() const noexcept { return pairs.empty(); }
};

// Confidence descending, then (src, tgt) ascending.
void sort_by_confidence(std::vector<Correspondence>& pairs);

// True when confidences are nonincreasing and no (src, tgt) repeats.
bool is_canonical(const CorrespondenceSet& set);

// CSV with header `src_index,tgt_index,confidence`, confidence printed with
// 9 significant digits.
void write_correspondences_csv(std::ostream& out, const CorrespondenceSet& set);
void write_correspondences_csv(const std::string& path, const CorrespondenceSet& set);
CorrespondenceSet read_correspondences_csv(std::istream& in);
CorrespondenceSet read_correspondences_csv(const std::string& path);

}  // namespace cmha
