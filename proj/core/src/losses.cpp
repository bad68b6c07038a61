#include "cmha/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cmha/error.hpp"

namespace cmha {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log-sum-exp of v, writing softmax weights into w. Empty input gives -inf.
double logsumexp(std::span<const double> v, std::span<double> w) {
  if (v.empty()) return kNegInf;
  const double peak = *std::max_element(v.begin(), v.end());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    w[i] = std::exp(v[i] - peak);
    total += w[i];
  }
  for (double& x : w) x /= total;
  return peak + std::log(total);
}

// One direction: rows are anchors. Adds dL/d(dist) * scale into grad.
// Returns (sum over anchors, anchor count).
std::pair<double, std::size_t> circle_direction(const Matrix& dist, const Matrix& overlaps,
                                                const CircleLossConfig& cfg, Matrix& grad,
                                                bool transposed) {
  const std::size_t rows = dist.rows();
  const std::size_t cols = dist.cols();
  double total = 0.0;
  std::size_t anchors = 0;

  struct Term {
    std::size_t j;
    double exponent;
    double slope;  // d exponent / d distance
  };
  std::vector<Term> pos, neg;
  std::vector<double> ev, wv;

  // First pass counts anchors so the per-anchor mean can scale gradients.
  std::vector<std::size_t> anchor_rows;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      if (overlaps(i, j) > cfg.positive_overlap_min) {
        anchor_rows.push_back(i);
        break;
      }
    }
  }
  anchors = anchor_rows.size();
  if (anchors == 0) return {0.0, 0};
  const double inv_anchors = 1.0 / static_cast<double>(anchors);

  for (std::size_t i : anchor_rows) {
    pos.clear();
    neg.clear();
    for (std::size_t j = 0; j < cols; ++j) {
      const double o = overlaps(i, j);
      const double d = dist(i, j);
      if (o > cfg.positive_overlap_min) {
        const double lam = std::sqrt(o);
        const double gap = std::max(d - cfg.delta_p, 0.0);
        pos.push_back({j, lam * cfg.gamma * gap * (d - cfg.delta_p),
                       2.0 * lam * cfg.gamma * gap});
      } else if (o == 0.0) {
        const double gap = std::max(cfg.delta_n - d, 0.0);
        neg.push_back({j, cfg.gamma * gap * (cfg.delta_n - d), -2.0 * cfg.gamma * gap});
      }
    }
    if (neg.empty()) continue;  // empty negative sum: log(1 + 0) = 0

    ev.resize(pos.size());
    wv.resize(pos.size());
    for (std::size_t t = 0; t < pos.size(); ++t) ev[t] = pos[t].exponent;
    const double lse_p = logsumexp(ev, wv);
    std::vector<double> wp = wv;

    ev.resize(neg.size());
    wv.resize(neg.size());
    for (std::size_t t = 0; t < neg.size(); ++t) ev[t] = neg[t].exponent;
    const double lse_n = logsumexp(ev, wv);

    const double x = lse_p + lse_n;
    total += softplus(x);
    const double outer = sigmoid(x) * inv_anchors;
    auto put = [&](std::size_t j, double g) {
      if (transposed) grad(j, i) += g; else grad(i, j) += g;
    };
    for (std::size_t t = 0; t < pos.size(); ++t) put(pos[t].j, outer * wp[t] * pos[t].slope);
    for (std::size_t t = 0; t < neg.size(); ++t) put(neg[t].j, outer * wv[t] * neg[t].slope);
  }
  return {total * inv_anchors, anchors};
}

}  // namespace

void CircleLossConfig::validate() const {
  if (!(delta_p > 0.0 && delta_p < delta_n)) throw Error("need 0 < delta_p < delta_n");
  if (!(gamma > 0.0)) throw Error("gamma must be positive");
}

Matrix pairwise_distances(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw Error("feature width mismatch");
  Matrix d(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double acc = 0.0;
      for (std::size_t c = 0; c < a.cols(); ++c) {
        const double diff = a(i, c) - b(j, c);
        acc += diff * diff;
      }
      d(i, j) = std::sqrt(acc);
    }
  }
  return d;
}

CircleLossResult circle_loss_from_distances(const Matrix& dist, const Matrix& overlaps,
                                            const CircleLossConfig& cfg) {
  cfg.validate();
  if (dist.rows() != overlaps.rows() || dist.cols() != overlaps.cols())
    throw Error("distance and overlap tables differ in shape");
  for (double o : overlaps.data())
    if (!(o >= 0.0 && o <= 1.0)) throw Error("overlap ratios must lie in [0, 1]");

  CircleLossResult out;
  Matrix grad_p(dist.rows(), dist.cols());
  Matrix grad_q(dist.rows(), dist.cols());
  const auto [lp, ap] = circle_direction(dist, overlaps, cfg, grad_p, false);
  const auto [lq, aq] =
      circle_direction(transpose(dist), transpose(overlaps), cfg, grad_q, true);
  if (ap == 0 || aq == 0) throw Error("empty anchor set");
  out.value = 0.5 * (lp + lq);
  out.grad_dist = scale(add(grad_p, grad_q), 0.5);
  out.src_anchors = ap;
  out.tgt_anchors = aq;
  return out;
}

CircleLossResult coarse_circle_loss(const Matrix& src_feats, const Matrix& tgt_feats,
                                    const Matrix& overlaps, const CircleLossConfig& cfg) {
  const Matrix dist = pairwise_distances(src_feats, tgt_feats);
  CircleLossResult out = circle_loss_from_distances(dist, overlaps, cfg);
  out.grad_src = Matrix(src_feats.rows(), src_feats.cols());
  out.grad_tgt = Matrix(tgt_feats.rows(), tgt_feats.cols());
  for (std::size_t i = 0; i < dist.rows(); ++i) {
    for (std::size_t j = 0; j < dist.cols(); ++j) {
      const double g = out.grad_dist(i, j);
      if (g == 0.0 || dist(i, j) == 0.0) continue;
      const double k = g / dist(i, j);
      for (std::size_t c = 0; c < src_feats.cols(); ++c) {
        const double diff = src_feats(i, c) - tgt_feats(j, c);
        out.grad_src(i, c) += k * diff;
        out.grad_tgt(j, c) -= k * diff;
      }
    }
  }
  return out;
}

FinePatchSupervision fine_supervision(std::span<const Vec3> src, std::span<const Vec3> tgt,
                                      std::span<const std::size_t> src_group,
                                      std::span<const std::size_t> tgt_group,
                                      const RigidTransform& gt, double radius) {
  FinePatchSupervision sup;
  std::vector<bool> tgt_hit(tgt_group.size(), false);
  const double r2 = radius * radius;
  for (std::size_t x = 0; x < src_group.size(); ++x) {
    const Vec3 p = gt.apply(src[src_group[x]]);
    bool hit = false;
    for (std::size_t y = 0; y < tgt_group.size(); ++y) {
      if (squared_distance(p, tgt[tgt_group[y]]) < r2) {
        sup.matched.emplace_back(x, y);
        tgt_hit[y] = true;
        hit = true;
      }
    }
    if (!hit) sup.unmatched_src.push_back(x);
  }
  for (std::size_t y = 0; y < tgt_group.size(); ++y)
    if (!tgt_hit[y]) sup.unmatched_tgt.push_back(y);
  return sup;
}

FineLossResult fine_matching_loss(std::span<const Matrix> z_list,
                                  std::span<const FinePatchSupervision> gt,
                                  FineLossNormalization norm) {
  if (z_list.size() != gt.size()) throw Error("one supervision entry per patch required");
  if (z_list.empty()) throw Error("fine loss needs at least one patch");
  std::size_t supervised = 0;
  for (const auto& s : gt)
    supervised += s.matched.size() + s.unmatched_src.size() + s.unmatched_tgt.size();
  const double denom = norm == FineLossNormalization::kPatchCount
                           ? static_cast<double>(z_list.size())
                           : static_cast<double>(std::max<std::size_t>(supervised, 1));

  FineLossResult out;
  out.grad_z.reserve(z_list.size());
  double total = 0.0;
  for (std::size_t p = 0; p < z_list.size(); ++p) {
    const Matrix& z = z_list[p];
    if (z.rows() < 2 || z.cols() < 2) throw Error("assignment matrix must include dustbins");
    const std::size_t bin_row = z.rows() - 1;
    const std::size_t bin_col = z.cols() - 1;
    Matrix g(z.rows(), z.cols());
    auto term = [&](std::size_t r, std::size_t c) {
      if (r >= z.rows() || c >= z.cols()) throw Error("supervision index out of range");
      const double v = z(r, c);
      if (!(v > 0.0)) throw Error("zero probability at supervised entry");
      total -= std::log(v);
      g(r, c) -= 1.0 / (v * denom);
    };
    for (const auto& [x, y] : gt[p].matched) {
      if (x >= bin_row || y >= bin_col) throw Error("supervision index out of range");
      term(x, y);
    }
    for (std::size_t x : gt[p].unmatched_src) {
      if (x >= bin_row) throw Error("supervision index out of range");
      term(x, bin_col);
    }
    for (std::size_t y : gt[p].unmatched_tgt) {
      if (y >= bin_col) throw Error("supervision index out of range");
      term(bin_row, y);
    }
    out.grad_z.push_back(std::move(g));
  }
  out.value = total / denom;
  return out;
}

ContrastiveResult contrastive_from_similarity(const Matrix& s) {
  const std::size_t n = s.rows();
  if (n == 0) throw Error("contrastive loss needs at least one superpoint");
  if (s.cols() != n) throw Error("contrastive similarity must be square");
  ContrastiveResult out;
  out.grad_s = Matrix(n, n);
  std::vector<double> w(n);
  double total = 0.0;
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double lse = logsumexp(s.row(i), w);
    total += lse - s(i, i);
    for (std::size_t j = 0; j < n; ++j) out.grad_s(i, j) = (w[j] - (i == j ? 1.0 : 0.0)) * inv;
  }
  out.value = total * inv;
  return out;
}

ContrastiveResult cross_modal_contrastive(const Matrix& geo_feats, const Matrix& img_feats) {
  if (geo_feats.rows() != img_feats.rows() || geo_feats.cols() != img_feats.cols())
    throw Error("geometric and image features must have equal shapes");
  if (geo_feats.rows() == 0) throw Error("contrastive loss needs at least one superpoint");
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(geo_feats.cols()));
  ContrastiveResult out =
      contrastive_from_similarity(scale(matmul_transposed(geo_feats, img_feats), inv_sqrt_d));
  out.grad_geo = scale(matmul(out.grad_s, img_feats), inv_sqrt_d);
  out.grad_img = scale(matmul(transpose(out.grad_s), geo_feats), inv_sqrt_d);
  return out;
}

LossReport total_loss(double l_c, double l_f, double l_cmc, double lambda_weight) {
  if (!std::isfinite(l_c) || !std::isfinite(l_f) || !std::isfinite(l_cmc) ||
      !std::isfinite(lambda_weight))
    throw Error("loss components must be finite");
  return {l_c, l_f, l_cmc, l_c + l_f + lambda_weight * l_cmc, lambda_weight};
}

}  // namespace cmha
