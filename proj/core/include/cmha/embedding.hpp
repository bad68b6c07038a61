#pragma once

#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "cmha/geometry.hpp"
#include "cmha/tensor.hpp"

namespace cmha {

struct EmbeddingConfig {
  std::size_t d = 24;
  double sigma_d = 0.2;                                // meters
  double sigma_alpha = 15.0 * std::numbers::pi / 180;  // radians
  std::size_t k_anchors = 3;

  void validate() const;
  bool operator==(const EmbeddingConfig&) const = default;
};

// N x N grid of d-wide rows, row (i, j) at offset (i * n + j) * d.
class PairEmbedding {
 public:
  PairEmbedding() = default;
  PairEmbedding(std::size_t n, std::size_t d) : n_(n), d_(d), values_(n * n * d) {}

  std::size_t n() const noexcept { return n_; }
  std::size_t d() const noexcept { return d_; }

  std::span<double> at(std::size_t i, std::size_t j) {
    return {values_.data() + (i * n_ + j) * d_, d_};
  }
  std::span<const double> at(std::size_t i, std::size_t j) const {
    return {values_.data() + (i * n_ + j) * d_, d_};
  }
  std::span<const double> values() const noexcept { return values_; }

  double max_abs_diff(const PairEmbedding& other) const;

 private:
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::vector<double> values_;
};

// Sinusoidal encoding of pairwise distances before the learned map:
// channel 2m = sin(d_ij / sigma_d / 10000^(2m/d)), channel 2m+1 = cos(same).
PairEmbedding distance_sinusoid(std::span<const Vec3> coords,
                                const EmbeddingConfig& cfg);

// Triplet angles alpha[(i * n + j) * k + r] between p_j - p_i and
// p_x - p_i, where x is the r-th nearest neighbor of i other than i and j.
// Zero-length vectors give angle 0. Requires n >= k + 2.
std::vector<double> anchor_angles(std::span<const Vec3> coords, std::size_t k);

// Angle encoding for every (i, j, r): a d-wide sin/cos block whose channel 0
// is sin(alpha / sigma_alpha). Indexed like anchor_angles, times d.
struct AngleEmbedding {
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t d = 0;
  std::vector<double> values;

  std::span<const double> at(std::size_t i, std::size_t j, std::size_t r) const {
    return {values.data() + ((i * n + j) * k + r) * d, d};
  }
};
AngleEmbedding angle_embedding(std::span<const Vec3> coords,
                               const EmbeddingConfig& cfg);

// Learned parts of the geometric embedding. The distance encoding passes
// through relu(x * w_hidden) and is then projected by w_d; each anchor's
// angle encoding is projected by w_a.
struct GeoEmbeddingWeights {
  Matrix w_hidden;
  Matrix w_d;
  Matrix w_a;
};
GeoEmbeddingWeights init_geo_weights(std::size_t d, std::uint64_t seed);

// relu(distance_sinusoid * w_hidden), before the w_d projection.
PairEmbedding distance_embedding(std::span<const Vec3> coords,
                                 const EmbeddingConfig& cfg,
                                 const GeoEmbeddingWeights& w);

// E_ij = E^D_ij w_d + max_r (E^A_ijr w_a), max taken per channel.
PairEmbedding pair_geometric_embedding(std::span<const Vec3> coords,
                                       const EmbeddingConfig& cfg,
                                       const GeoEmbeddingWeights& w);

// Absolute sinusoidal embedding of 2D or 3D positions (one row per
// position). The d channels are split evenly across the axes; within an
// axis, channel 2m = sin(x / scale / 10000^(2m/w)) and 2m+1 = cos, with w the
// per-axis width. d must be divisible by 2 * axes.
Matrix absolute_position_embedding(const Matrix& positions, std::size_t d,
                                   double scale);

}  // namespace cmha
