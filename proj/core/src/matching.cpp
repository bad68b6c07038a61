#include "cmha/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "cmha/error.hpp"
#include "cmha/parallel.hpp"

namespace cmha {

void MatchingConfig::validate() const {
  if (k_coarse < 1 || k_dense < 1) throw Error("top-k counts must be >= 1");
  if (l_iters < 1) throw Error("sinkhorn iterations must be >= 1");
  if (!std::isfinite(dustbin_logit)) throw Error("dustbin logit must be finite");
  if (!(feature_norm >= 0.0) || !std::isfinite(feature_norm))
    throw Error("feature_norm must be finite and >= 0");
}

Matrix feature_similarity(
    const Matrix& src, const Matrix& tgt,
    std::span<const std::pair<std::size_t, std::size_t>> mask) {
  if (src.cols() != tgt.cols()) {
    throw Error("feature width mismatch: " + std::to_string(src.cols()) + " vs " +
                std::to_string(tgt.cols()));
  }
  Matrix s = matmul_transposed(src, tgt);
  const double inv = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(src.cols(), 1)));
  for (double& v : s.data()) v *= inv;
  for (const auto& [m, n] : mask) {
    if (m >= s.rows() || n >= s.cols()) throw Error("mask index out of range");
    s(m, n) = -std::numeric_limits<double>::infinity();
  }
  return s;
}

Matrix normalize_rows(const Matrix& m, double target) {
  Matrix out = m;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    double n2 = 0.0;
    for (double v : row) n2 += v * v;
    if (n2 <= 0.0) continue;
    const double f = target / std::sqrt(n2);
    for (double& v : row) v *= f;
  }
  return out;
}

Matrix dustbin_augment(const Matrix& s, double z) {
  Matrix out(s.rows() + 1, s.cols() + 1, z);
  for (std::size_t i = 0; i < s.rows(); ++i)
    std::copy_n(s.row(i).begin(), s.cols(), out.row(i).begin());
  return out;
}

AssignmentMatrix sinkhorn(const Matrix& s_bar, std::size_t l_iters) {
  if (l_iters < 1) throw Error("sinkhorn iterations must be >= 1");
  if (s_bar.rows() < 2 || s_bar.cols() < 2)
    throw Error("augmented score matrix must be at least 2x2");
  const std::size_t rows = s_bar.rows() - 1;
  const std::size_t cols = s_bar.cols() - 1;

  double peak = -std::numeric_limits<double>::infinity();
  for (double v : s_bar.data()) peak = std::max(peak, v);
  if (!std::isfinite(peak)) throw Error("degenerate scores");

  AssignmentMatrix out;
  out.dustbin_logit = s_bar(rows, cols);
  out.z = Matrix(s_bar.rows(), s_bar.cols());
  Matrix& z = out.z;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double v = s_bar.data()[i];
    z.data()[i] = std::isinf(v) ? 0.0 : std::exp(v - peak);
  }

  std::vector<double> col_sum(cols);
  auto check_mass = [&] {
    std::fill(col_sum.begin(), col_sum.end(), 0.0);
    for (std::size_t i = 0; i <= rows; ++i) {
      double row_sum = 0.0;
      for (std::size_t j = 0; j <= cols; ++j) {
        row_sum += z(i, j);
        if (j < cols) col_sum[j] += z(i, j);
      }
      if (i < rows && !(row_sum > 0.0)) throw Error("degenerate scores");
    }
    for (double c : col_sum)
      if (!(c > 0.0)) throw Error("degenerate scores");
  };
  check_mass();

  // The dustbin row carries mass cols and the dustbin column mass rows, so
  // the augmented problem is balanced and converges quickly. A closed
  // dustbin (all zero) is left alone.
  const double bin_row_target = static_cast<double>(cols);
  const double bin_col_target = static_cast<double>(rows);
  for (std::size_t it = 0; it < l_iters; ++it) {
    for (std::size_t i = 0; i <= rows; ++i) {
      auto r = z.row(i);
      double sum = 0.0;
      for (double v : r) sum += v;
      if (i == rows && !(sum > 0.0)) continue;
      const double scale = (i == rows ? bin_row_target : 1.0) / sum;
      for (double& v : r) v *= scale;
    }
    col_sum.assign(cols + 1, 0.0);
    for (std::size_t i = 0; i <= rows; ++i)
      for (std::size_t j = 0; j <= cols; ++j) col_sum[j] += z(i, j);
    for (std::size_t j = 0; j <= cols; ++j) {
      if (j == cols && !(col_sum[j] > 0.0)) continue;
      col_sum[j] = (j == cols ? bin_col_target : 1.0) / col_sum[j];
    }
    for (std::size_t i = 0; i <= rows; ++i)
      for (std::size_t j = 0; j <= cols; ++j)
        if (j < cols || col_sum[cols] > 0.0) z(i, j) *= col_sum[j];
  }

  for (std::size_t i = 0; i < rows; ++i) {
    double sum = 0.0;
    for (double v : z.row(i)) sum += v;
    out.row_residual = std::max(out.row_residual, std::abs(sum - 1.0));
  }
  for (std::size_t j = 0; j < cols; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i <= rows; ++i) sum += z(i, j);
    out.col_residual = std::max(out.col_residual, std::abs(sum - 1.0));
  }
  if (!std::isfinite(out.row_residual) || !std::isfinite(out.col_residual))
    throw Error("degenerate scores");
  return out;
}

CorrespondenceSet topk_select(const AssignmentMatrix& z, std::size_t k) {
  const std::size_t rows = z.src_count();
  const std::size_t cols = z.tgt_count();
  std::vector<Correspondence> all;
  all.reserve(rows * cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) all.push_back({i, j, z.z(i, j), kNoPatch});
  k = std::min(k, all.size());
  auto better = [](const Correspondence& a, const Correspondence& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.src != b.src) return a.src < b.src;
    return a.tgt < b.tgt;
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                    better);
  all.resize(k);
  return {std::move(all), CorrespondenceLevel::kCoarse};
}

DenseMatches dense_refine(const CorrespondenceSet& coarse,
                          const SuperpointSet& src_sp, const SuperpointSet& tgt_sp,
                          const Matrix& src_dense_feats, const Matrix& tgt_dense_feats,
                          const MatchingConfig& cfg, std::size_t workers) {
  cfg.validate();
  if (src_dense_feats.cols() != tgt_dense_feats.cols())
    throw Error("dense feature width mismatch");
  DenseMatches out;
  out.per_patch.resize(coarse.size());
  parallel_for(coarse.size(), workers, [&](std::size_t p) {
    const auto& c = coarse.pairs[p];
    if (c.src >= src_sp.groups.size() || c.tgt >= tgt_sp.groups.size())
      throw Error("coarse pair references a missing group");
    const auto& gs = src_sp.groups[c.src];
    const auto& gt = tgt_sp.groups[c.tgt];
    CorrespondenceSet& local = out.per_patch[p];
    local.level = CorrespondenceLevel::kDense;
    if (gs.empty() || gt.empty()) return;
    const Matrix fs = gather_rows(src_dense_feats, gs);
    const Matrix ft = gather_rows(tgt_dense_feats, gt);
    const AssignmentMatrix zp =
        sinkhorn(dustbin_augment(feature_similarity(fs, ft), cfg.dustbin_logit), cfg.l_iters);
    CorrespondenceSet top = topk_select(zp, cfg.k_dense);
    for (auto& m : top.pairs) {
      local.pairs.push_back({gs[m.src], gt[m.tgt], m.confidence, p});
    }
  });

  // Keep the best instance of each (src, tgt); ties go to the lower patch.
  std::map<std::pair<std::size_t, std::size_t>, Correspondence> best;
  for (std::size_t p = 0; p < out.per_patch.size(); ++p) {
    const auto& c = coarse.pairs[p];
    if (src_sp.groups[c.src].empty() || tgt_sp.groups[c.tgt].empty()) ++out.empty_patches;
    for (const auto& m : out.per_patch[p].pairs) {
      auto [it, inserted] = best.try_emplace({m.src, m.tgt}, m);
      if (!inserted && m.confidence > it->second.confidence) it->second = m;
    }
  }
  out.merged.level = CorrespondenceLevel::kDense;
  out.merged.pairs.reserve(best.size());
  for (auto& [key, m] : best) out.merged.pairs.push_back(m);
  sort_by_confidence(out.merged.pairs);
  return out;
}

}  // namespace cmha
