#include "cmha/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cmha/error.hpp"
#include "cmha/rng.hpp"

namespace cmha {

namespace {

// Fills out[2m], out[2m+1] with sin/cos of value / 10000^(2m / width).
void sinusoid(double value, std::span<double> out) {
  const double width = static_cast<double>(out.size());
  for (std::size_t m = 0; 2 * m < out.size(); ++m) {
    const double arg = value / std::pow(10000.0, 2.0 * m / width);
    out[2 * m] = std::sin(arg);
    if (2 * m + 1 < out.size()) out[2 * m + 1] = std::cos(arg);
  }
}

// row * w for a single row.
void project_row(std::span<const double> row, const Matrix& w,
                 std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t k = 0; k < row.size(); ++k) {
    const double v = row[k];
    if (v == 0.0) continue;
    const auto wr = w.row(k);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += v * wr[c];
  }
}

}  // namespace

void EmbeddingConfig::validate() const {
  if (d == 0 || d % 2 != 0) throw Error("embedding dimension must be even");
  if (!(sigma_d > 0.0)) throw Error("sigma_d must be positive");
  if (!(sigma_alpha > 0.0)) throw Error("sigma_alpha must be positive");
  if (k_anchors < 1) throw Error("k_anchors must be >= 1");
}

double PairEmbedding::max_abs_diff(const PairEmbedding& other) const {
  if (n_ != other.n_ || d_ != other.d_)
    return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i)
    worst = std::max(worst, std::abs(values_[i] - other.values_[i]));
  return worst;
}

PairEmbedding distance_sinusoid(std::span<const Vec3> coords,
                                const EmbeddingConfig& cfg) {
  cfg.validate();
  if (coords.empty()) throw Error("distance embedding needs at least one point");
  const std::size_t n = coords.size();
  PairEmbedding out(n, cfg.d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      sinusoid(distance(coords[i], coords[j]) / cfg.sigma_d, out.at(i, j));
    }
  }
  return out;
}

std::vector<double> anchor_angles(std::span<const Vec3> coords, std::size_t k) {
  const std::size_t n = coords.size();
  if (k < 1) throw Error("k_anchors must be >= 1");
  if (n < k + 2) {
    throw Error("angle embedding needs at least " + std::to_string(k + 2) +
                " points, got " + std::to_string(n));
  }
  std::vector<double> angles(n * n * k);
  std::vector<std::size_t> order(n);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < n; ++m) d2[m] = squared_distance(coords[i], coords[m]);
    std::iota(order.begin(), order.end(), std::size_t{0});
    // i itself sorts first (distance 0) unless duplicated; it is skipped below.
    const std::size_t keep = std::min(n, k + 2);
    std::partial_sort(order.begin(), order.begin() + keep, order.end(),
                      [&](std::size_t a, std::size_t b) {
                        if (d2[a] != d2[b]) return d2[a] < d2[b];
                        return a < b;
                      });
    for (std::size_t j = 0; j < n; ++j) {
      const Vec3 a = coords[j] - coords[i];
      std::size_t r = 0;
      for (std::size_t t = 0; t < keep && r < k; ++t) {
        const std::size_t x = order[t];
        if (x == i || x == j) continue;
        const Vec3 b = coords[x] - coords[i];
        const double s = norm(cross(a, b));
        const double c = dot(a, b);
        angles[(i * n + j) * k + r] = (s == 0.0 && c == 0.0) ? 0.0 : std::atan2(s, c);
        ++r;
      }
    }
  }
  return angles;
}

AngleEmbedding angle_embedding(std::span<const Vec3> coords,
                               const EmbeddingConfig& cfg) {
  cfg.validate();
  const auto angles = anchor_angles(coords, cfg.k_anchors);
  AngleEmbedding out;
  out.n = coords.size();
  out.k = cfg.k_anchors;
  out.d = cfg.d;
  out.values.resize(angles.size() * cfg.d);
  for (std::size_t t = 0; t < angles.size(); ++t) {
    sinusoid(angles[t] / cfg.sigma_alpha,
             std::span<double>(out.values.data() + t * cfg.d, cfg.d));
  }
  return out;
}

GeoEmbeddingWeights init_geo_weights(std::size_t d, std::uint64_t seed) {
  return {uniform_matrix(d, d, derive_seed(seed, 0)),
          uniform_matrix(d, d, derive_seed(seed, 1)),
          uniform_matrix(d, d, derive_seed(seed, 2))};
}

PairEmbedding distance_embedding(std::span<const Vec3> coords,
                                 const EmbeddingConfig& cfg,
                                 const GeoEmbeddingWeights& w) {
  const PairEmbedding raw = distance_sinusoid(coords, cfg);
  const std::size_t n = raw.n();
  PairEmbedding out(n, cfg.d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      auto o = out.at(i, j);
      project_row(raw.at(i, j), w.w_hidden, o);
      for (double& v : o) v = std::max(v, 0.0);
    }
  }
  return out;
}

PairEmbedding pair_geometric_embedding(std::span<const Vec3> coords,
                                       const EmbeddingConfig& cfg,
                                       const GeoEmbeddingWeights& w) {
  const PairEmbedding dist = distance_embedding(coords, cfg, w);
  const AngleEmbedding ang = angle_embedding(coords, cfg);
  const std::size_t n = coords.size();
  const std::size_t d = cfg.d;
  PairEmbedding out(n, d);
  std::vector<double> projected(d);
  std::vector<double> best(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      std::fill(best.begin(), best.end(), -std::numeric_limits<double>::infinity());
      for (std::size_t r = 0; r < ang.k; ++r) {
        project_row(ang.at(i, j, r), w.w_a, projected);
        for (std::size_t c = 0; c < d; ++c) best[c] = std::max(best[c], projected[c]);
      }
      auto o = out.at(i, j);
      project_row(dist.at(i, j), w.w_d, o);
      for (std::size_t c = 0; c < d; ++c) o[c] += best[c];
    }
  }
  return out;
}

Matrix absolute_position_embedding(const Matrix& positions, std::size_t d,
                                   double scale) {
  const std::size_t axes = positions.cols();
  if (axes == 0) throw Error("positions need at least one axis");
  if (d == 0 || d % (2 * axes) != 0) {
    throw Error("embedding width " + std::to_string(d) +
                " is not divisible by 2 * " + std::to_string(axes) + " axes");
  }
  if (!(scale > 0.0)) throw Error("position scale must be positive");
  const std::size_t width = d / axes;
  Matrix out(positions.rows(), d);
  for (std::size_t i = 0; i < positions.rows(); ++i) {
    for (std::size_t a = 0; a < axes; ++a) {
      const double v = positions(i, a);
      if (!std::isfinite(v)) throw Error("non-finite position");
      sinusoid(v / scale, out.row(i).subspan(a * width, width));
    }
  }
  return out;
}

}  // namespace cmha
