#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cmha/attention.hpp"
#include "cmha/correspondence.hpp"
#include "cmha/rng.hpp"
#include "cmha/geometry.hpp"
#include "cmha/tensor.hpp"

namespace cmha {

struct SceneConfig {
  std::size_t n_points = 1500;  // points per cloud
  std::size_t n_superpoints = 64;
  double overlap_fraction = 0.5;
  double noise_sigma = 0.01;      // meters, target coordinates only
  double outlier_fraction = 0.0;  // target points replaced by clutter
  std::size_t feature_dim = 24;
  double feature_noise_sigma = 0.0;
  std::uint64_t seed = 0;
  std::size_t image_rows = 8;
  std::size_t image_cols = 8;
  double focal = 500.0;  // pixels

  void validate() const;
  bool operator==(const SceneConfig&) const = default;
};

// Two partially overlapping crops of one random surface scene; the target
// crop is moved by `gt` and perturbed. Dense descriptors are computed on
// the noise-free base scene before cropping, so shared points carry
// matching features up to feature_noise_sigma. Everything is a pure function of
// the config.
struct SyntheticScene {
  SceneConfig config;
  PointCloud src;  // features hold the dense descriptors
  PointCloud tgt;
  RigidTransform gt;  // maps source coordinates onto the target
  SuperpointSet src_super;
  SuperpointSet tgt_super;
  ImagePatches src_img;
  ImagePatches tgt_img;
  Matrix overlap_table;  // N_P x N_Q superpoint-pair overlap ratios
  CorrespondenceSet gt_correspondences;
  double measured_overlap = 0.0;
};

inline constexpr double kOverlapRadius = 0.05;  // meters

// Throws Error when the requested overlap cannot be met within 0.05 after
// 100 attempts.
SyntheticScene generate_scene(const SceneConfig& cfg);

// Fraction of src points within `radius` of some target point after moving
// src by gt.
double measure_overlap(std::span<const Vec3> src, std::span<const Vec3> tgt,
                       const RigidTransform& gt, double radius = kOverlapRadius);

// Sorted distances from each point to its m nearest other points (n x m).
// Throws unless the cloud has more than m points.
Matrix neighbor_distances(std::span<const Vec3> points, std::size_t m);

inline constexpr double kWhiteningRidge = 1e-4;  // relative to the top eigenvalue

// Multivariate z-scoring: x -> (x - mean) W with W = (C + ridge * max_eig I)^(-1/2)
// for the sample covariance C, so the fit data leaves with zero mean and
// near-identity covariance. Raw neighbor distances are dominated by one
// overall-density direction; whitening brings out the shape channels.
struct Whitening {
  std::vector<double> mean;
  Matrix transform;  // symmetric d x d

  Matrix apply(const Matrix& x) const;
};
Whitening fit_whitening(const Matrix& samples, double ridge = kWhiteningRidge);

// Rigid-invariant descriptor per point: d sorted neighbor distances,
// whitened over the cloud, plus N(0, noise_sigma) noise drawn from
// Xorshift64Star(seed).
Matrix synth_features(std::span<const Vec3> points, std::size_t d, double noise_sigma,
                      std::uint64_t seed);

// Descriptors for two clouds that share one whitening fitted on both, so
// matching points land in the same coordinates.
std::pair<Matrix, Matrix> synth_pair_features(std::span<const Vec3> src,
                                              std::span<const Vec3> tgt, std::size_t d);

// Mean dense feature of each group; zero rows for empty groups.
Matrix group_mean_features(const Matrix& dense,
                           const std::vector<std::vector<std::size_t>>& groups);

// Farthest point sampling starting from index 0.
std::vector<std::size_t> farthest_point_sampling(std::span<const Vec3> points, std::size_t k);

// FPS superpoints, nearest-superpoint groups and mean features.
SuperpointSet build_superpoints(std::span<const Vec3> points, const Matrix& dense_feats,
                                std::size_t n_superpoints);

struct ImageGridConfig {
  std::size_t rows = 8;
  std::size_t cols = 8;
  double focal = 500.0;
};

// Pinhole camera at centroid - 4 m along z, looking down +z, with a
// 2f x 2f pixel image split into rows x cols cells. A cell's feature is the
// mean feature of the points projecting into it (zero when empty); its
// pixel coordinate is the cell center. Throws when every point is behind
// the camera.
ImagePatches synth_image_grid(std::span<const Vec3> points, const Matrix& feats,
                              const ImageGridConfig& grid);

// (row, col) cell of each point, or -1 when it falls outside the image or
// behind the camera.
std::vector<long> image_cell_of_points(std::span<const Vec3> points,
                                       const ImageGridConfig& grid);

// overlap(i, j) = fraction of src group i points within `radius` of a
// point of tgt group j after moving src by gt.
Matrix superpoint_overlap_table(std::span<const Vec3> src, std::span<const Vec3> tgt,
                                const SuperpointSet& src_sp, const SuperpointSet& tgt_sp,
                                const RigidTransform& gt, double radius = kOverlapRadius);

// Rewires round(fraction * n) seeded-random pairs to a different uniformly
// drawn target index in [0, tgt_count).
CorrespondenceSet corrupt_correspondences(const CorrespondenceSet& corrs, double fraction,
                                          std::size_t tgt_count, std::uint64_t seed);

// Rotation drawn uniformly from SO(3) (Shoemake's quaternion method).
Mat3 random_rotation(Xorshift64Star& rng);

// src.ply, tgt.ply (double precision), gt.json, meta.json.
void export_scene(const SyntheticScene& scene, const std::string& dir);
// Regenerates the scene from meta.json and checks it against the stored
// clouds and transform.
SyntheticScene import_scene(const std::string& dir);

}  // namespace cmha
