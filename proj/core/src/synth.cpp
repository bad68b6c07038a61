#include "cmha/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <numeric>

#include "cmha/error.hpp"
#include "cmha/ply.hpp"
#include "cmha/rng.hpp"
#include "cmha/serialization.hpp"

namespace cmha {

namespace {

constexpr double kHalfCube = 1.5;  // scene lives in [-1.5, 1.5]^3
constexpr int kMaxAttempts = 100;
constexpr double kOverlapTolerance = 0.05;

bool inside_cube(const Vec3& p) {
  return std::abs(p.x) <= kHalfCube && std::abs(p.y) <= kHalfCube && std::abs(p.z) <= kHalfCube;
}

Vec3 random_unit(Xorshift64Star& rng) {
  const double z = rng.uniform(-1.0, 1.0);
  const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(phi), r * std::sin(phi), z};
}

// Orthonormal pair spanning the plane with normal n.
std::pair<Vec3, Vec3> tangent_basis(const Vec3& n) {
  const Vec3 helper = std::abs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  Vec3 a = cross(n, helper);
  a *= 1.0 / norm(a);
  return {a, cross(n, a)};
}

struct SurfacePatch {
  bool sphere = false;
  Vec3 center;
  Vec3 u, v;  // plane axes
  double half_u = 0, half_v = 0;
  double radius = 0;  // sphere
  double area = 0;
};

// Base scene: random planar rectangles and spheres, sampled uniformly by
// area and clipped to the cube.
std::vector<Vec3> sample_base_cloud(Xorshift64Star& rng, std::size_t count) {
  const int n_patches = 6 + static_cast<int>(rng.below(4));
  std::vector<SurfacePatch> patches;
  double total_area = 0.0;
  for (int k = 0; k < n_patches; ++k) {
    SurfacePatch p;
    p.sphere = rng.uniform() < 0.4;
    p.center = {rng.uniform(-1.1, 1.1), rng.uniform(-1.1, 1.1), rng.uniform(-1.1, 1.1)};
    if (p.sphere) {
      p.radius = rng.uniform(0.2, 0.6);
      p.area = 4.0 * std::numbers::pi * p.radius * p.radius;
    } else {
      std::tie(p.u, p.v) = tangent_basis(random_unit(rng));
      p.half_u = rng.uniform(0.3, 0.9);
      p.half_v = rng.uniform(0.3, 0.9);
      p.area = 4.0 * p.half_u * p.half_v;
    }
    total_area += p.area;
    patches.push_back(p);
  }
  std::vector<Vec3> pts;
  pts.reserve(count);
  while (pts.size() < count) {
    double pick = rng.uniform(0.0, total_area);
    std::size_t k = 0;
    while (k + 1 < patches.size() && pick >= patches[k].area) {
      pick -= patches[k].area;
      ++k;
    }
    const SurfacePatch& p = patches[k];
    Vec3 q;
    if (p.sphere) {
      q = p.center + random_unit(rng) * p.radius;
    } else {
      q = p.center + p.u * rng.uniform(-p.half_u, p.half_u) + p.v * rng.uniform(-p.half_v, p.half_v);
    }
    if (inside_cube(q)) pts.push_back(q);
  }
  return pts;
}

void add_feature_noise(Matrix& f, double sigma, std::uint64_t seed) {
  if (sigma <= 0.0) return;
  Xorshift64Star rng(seed);
  for (double& v : f.data()) v += sigma * rng.gaussian();
}

Vec3 bounded_noise(Xorshift64Star& rng, double sigma) {
  if (sigma <= 0.0) return {};
  for (;;) {
    const Vec3 e{rng.gaussian() * sigma, rng.gaussian() * sigma, rng.gaussian() * sigma};
    if (norm(e) <= 3.0 * sigma) return e;
  }
}

struct Crops {
  std::vector<std::size_t> src;  // base indices, ascending
  std::vector<std::size_t> tgt;
};

// Source = the n lowest points along `order`; target = the n points whose
// rank lies in [n - shared, 2n - shared). Both sorted by base index.
Crops make_crops(const std::vector<std::size_t>& order, std::size_t n, std::size_t shared) {
  Crops c;
  c.src.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
  c.tgt.assign(order.begin() + static_cast<std::ptrdiff_t>(n - shared),
               order.begin() + static_cast<std::ptrdiff_t>(2 * n - shared));
  std::sort(c.src.begin(), c.src.end());
  std::sort(c.tgt.begin(), c.tgt.end());
  return c;
}

}  // namespace

void SceneConfig::validate() const {
  if (n_points < 2) throw Error("n_points must be >= 2");
  if (n_superpoints < 1 || n_superpoints > n_points)
    throw Error("n_superpoints must be in [1, n_points]");
  auto frac = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!frac(overlap_fraction)) throw Error("overlap_fraction must lie in [0, 1]");
  if (!frac(outlier_fraction)) throw Error("outlier_fraction must lie in [0, 1]");
  if (!(noise_sigma >= 0.0) || !(feature_noise_sigma >= 0.0))
    throw Error("noise levels must be >= 0");
  if (feature_dim < 1) throw Error("feature_dim must be >= 1");
  if (feature_dim >= n_points) throw Error("feature_dim must be below n_points");
  if (image_rows < 2 || image_cols < 2) throw Error("image grid must be at least 2x2");
  if (!(focal > 0.0)) throw Error("focal must be positive");
}

Mat3 random_rotation(Xorshift64Star& rng) {
  const double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
  const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
  const double w = a * std::sin(2 * std::numbers::pi * u2);
  const double x = a * std::cos(2 * std::numbers::pi * u2);
  const double y = b * std::sin(2 * std::numbers::pi * u3);
  const double z = b * std::cos(2 * std::numbers::pi * u3);
  return {{{1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)},
           {2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)},
           {2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)}}};
}

double measure_overlap(std::span<const Vec3> src, std::span<const Vec3> tgt,
                       const RigidTransform& gt, double radius) {
  if (src.empty()) return 0.0;
  const double r2 = radius * radius;
  std::size_t hits = 0;
  for (const Vec3& p : src) {
    const Vec3 q = gt.apply(p);
    for (const Vec3& t : tgt) {
      if (squared_distance(q, t) < r2) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(src.size());
}

Matrix neighbor_distances(std::span<const Vec3> points, std::size_t m) {
  const std::size_t n = points.size();
  if (m < 1) throw Error("neighbor count must be >= 1");
  if (n <= m) throw Error("need more points than neighbors");
  Matrix f(n, m);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) d2[j] = squared_distance(points[i], points[j]);
    d2[i] = std::numeric_limits<double>::infinity();
    std::partial_sort(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(m), d2.end());
    for (std::size_t c = 0; c < m; ++c) f(i, c) = std::sqrt(d2[c]);
  }
  return f;
}

Matrix Whitening::apply(const Matrix& x) const {
  if (x.cols() != mean.size()) throw Error("whitening width mismatch");
  Matrix centered = x;
  for (std::size_t r = 0; r < centered.rows(); ++r) {
    auto row = centered.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] -= mean[c];
  }
  return matmul(centered, transform);
}

Whitening fit_whitening(const Matrix& samples, double ridge) {
  const std::size_t n = samples.rows(), d = samples.cols();
  if (n < 2 || d < 1) throw Error("whitening needs at least two samples");
  Whitening w;
  w.mean.assign(d, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) w.mean[c] += samples(r, c);
  for (double& m : w.mean) m /= static_cast<double>(n);
  Matrix cov(d, d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t a = 0; a < d; ++a) {
      const double xa = samples(r, a) - w.mean[a];
      for (std::size_t b = 0; b < d; ++b) cov(a, b) += xa * (samples(r, b) - w.mean[b]);
    }
  }
  for (double& v : cov.data()) v /= static_cast<double>(n);
  const SymmetricEigen eig = symmetric_eigen(cov);
  const double top = std::max(eig.values.back(), 0.0);
  if (!(top > 0.0)) throw Error("whitening: samples have no spread");
  // W = V diag(1 / sqrt(lambda + ridge * lambda_max)) V^T
  Matrix scaled = eig.vectors;
  for (std::size_t k = 0; k < d; ++k) {
    const double f = 1.0 / std::sqrt(std::max(eig.values[k], 0.0) + ridge * top);
    for (std::size_t r = 0; r < d; ++r) scaled(r, k) *= f;
  }
  w.transform = matmul_transposed(scaled, eig.vectors);
  return w;
}

Matrix synth_features(std::span<const Vec3> points, std::size_t d, double noise_sigma,
                      std::uint64_t seed) {
  const Matrix raw = neighbor_distances(points, d);
  Matrix f = fit_whitening(raw).apply(raw);
  add_feature_noise(f, noise_sigma, seed);
  return f;
}

std::pair<Matrix, Matrix> synth_pair_features(std::span<const Vec3> src,
                                              std::span<const Vec3> tgt, std::size_t d) {
  const Matrix a = neighbor_distances(src, d);
  const Matrix b = neighbor_distances(tgt, d);
  Matrix both(a.rows() + b.rows(), d);
  std::copy(a.data().begin(), a.data().end(), both.data().begin());
  std::copy(b.data().begin(), b.data().end(), both.data().begin() + static_cast<std::ptrdiff_t>(a.size()));
  const Whitening w = fit_whitening(both);
  return {w.apply(a), w.apply(b)};
}

Matrix group_mean_features(const Matrix& dense,
                           const std::vector<std::vector<std::size_t>>& groups) {
  Matrix out(groups.size(), dense.cols());
  for (std::size_t k = 0; k < groups.size(); ++k) {
    if (groups[k].empty()) continue;
    auto o = out.row(k);
    for (std::size_t i : groups[k]) {
      const auto r = dense.row(i);
      for (std::size_t c = 0; c < o.size(); ++c) o[c] += r[c];
    }
    for (double& v : o) v /= static_cast<double>(groups[k].size());
  }
  return out;
}

std::vector<std::size_t> farthest_point_sampling(std::span<const Vec3> points, std::size_t k) {
  if (points.empty() || k == 0) return {};
  k = std::min(k, points.size());
  std::vector<std::size_t> picked{0};
  std::vector<double> best(points.size(), std::numeric_limits<double>::infinity());
  while (picked.size() < k) {
    const Vec3& last = points[picked.back()];
    std::size_t arg = 0;
    double far = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      best[i] = std::min(best[i], squared_distance(points[i], last));
      if (best[i] > far) {
        far = best[i];
        arg = i;
      }
    }
    picked.push_back(arg);
  }
  return picked;
}

SuperpointSet build_superpoints(std::span<const Vec3> points, const Matrix& dense_feats,
                                std::size_t n_superpoints) {
  SuperpointSet sp;
  for (std::size_t i : farthest_point_sampling(points, n_superpoints))
    sp.coords.push_back(points[i]);
  sp.groups = group_by_nearest_superpoint(points, sp.coords);
  sp.features = group_mean_features(dense_feats, sp.groups);
  return sp;
}

std::vector<long> image_cell_of_points(std::span<const Vec3> points,
                                       const ImageGridConfig& grid) {
  const Vec3 cam = centroid(points) - Vec3{0.0, 0.0, 4.0};
  const double size = 2.0 * grid.focal;
  std::vector<long> cells(points.size(), -1);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec3 rel = points[i] - cam;
    if (rel.z <= 0.0) continue;
    const double u = grid.focal * rel.x / rel.z + grid.focal;
    const double v = grid.focal * rel.y / rel.z + grid.focal;
    if (u < 0.0 || v < 0.0 || u >= size || v >= size) continue;
    const auto col = static_cast<long>(u / size * static_cast<double>(grid.cols));
    const auto row = static_cast<long>(v / size * static_cast<double>(grid.rows));
    cells[i] = row * static_cast<long>(grid.cols) + col;
  }
  return cells;
}

ImagePatches synth_image_grid(std::span<const Vec3> points, const Matrix& feats,
                              const ImageGridConfig& grid) {
  if (grid.rows < 2 || grid.cols < 2) throw Error("image grid must be at least 2x2");
  if (feats.rows() != points.size()) throw Error("one feature row per point required");
  const Vec3 cam = centroid(points) - Vec3{0.0, 0.0, 4.0};
  const bool any_in_front = std::any_of(points.begin(), points.end(),
                                        [&](const Vec3& p) { return p.z - cam.z > 0.0; });
  if (!any_in_front) throw Error("all points behind camera");

  const auto cells = image_cell_of_points(points, grid);
  const std::size_t m = grid.rows * grid.cols;
  ImagePatches img;
  img.features = Matrix(m, feats.cols());
  img.pixels = Matrix(m, 2);
  std::vector<std::size_t> counts(m, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (cells[i] < 0) continue;
    const auto cell = static_cast<std::size_t>(cells[i]);
    ++counts[cell];
    auto o = img.features.row(cell);
    const auto r = feats.row(i);
    for (std::size_t c = 0; c < o.size(); ++c) o[c] += r[c];
  }
  const double cw = 2.0 * grid.focal / static_cast<double>(grid.cols);
  const double ch = 2.0 * grid.focal / static_cast<double>(grid.rows);
  for (std::size_t cell = 0; cell < m; ++cell) {
    if (counts[cell] > 0)
      for (double& v : img.features.row(cell)) v /= static_cast<double>(counts[cell]);
    img.pixels(cell, 0) = (static_cast<double>(cell % grid.cols) + 0.5) * cw;
    img.pixels(cell, 1) = (static_cast<double>(cell / grid.cols) + 0.5) * ch;
  }
  return img;
}

Matrix superpoint_overlap_table(std::span<const Vec3> src, std::span<const Vec3> tgt,
                                const SuperpointSet& src_sp, const SuperpointSet& tgt_sp,
                                const RigidTransform& gt, double radius) {
  std::vector<std::size_t> tgt_label(tgt.size());
  for (std::size_t j = 0; j < tgt_sp.groups.size(); ++j)
    for (std::size_t q : tgt_sp.groups[j]) tgt_label[q] = j;
  Matrix table(src_sp.size(), tgt_sp.size());
  const double r2 = radius * radius;
  std::vector<char> seen(tgt_sp.size());
  for (std::size_t i = 0; i < src_sp.groups.size(); ++i) {
    const auto& g = src_sp.groups[i];
    if (g.empty()) continue;
    for (std::size_t p : g) {
      std::fill(seen.begin(), seen.end(), 0);
      const Vec3 moved = gt.apply(src[p]);
      for (std::size_t q = 0; q < tgt.size(); ++q) {
        if (squared_distance(moved, tgt[q]) < r2) seen[tgt_label[q]] = 1;
      }
      for (std::size_t j = 0; j < seen.size(); ++j) table(i, j) += seen[j];
    }
    for (double& v : table.row(i)) v /= static_cast<double>(g.size());
  }
  return table;
}

CorrespondenceSet corrupt_correspondences(const CorrespondenceSet& corrs, double fraction,
                                          std::size_t tgt_count, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw Error("fraction must lie in [0, 1]");
  CorrespondenceSet out = corrs;
  const std::size_t n = corrs.size();
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (k == 0) return out;
  if (tgt_count < 2) throw Error("need at least two target points to rewire");
  Xorshift64Star rng(seed);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.below(n - i);
    std::swap(idx[i], idx[j]);
    auto& c = out.pairs[idx[i]];
    std::size_t t = rng.below(tgt_count - 1);
    if (t >= c.tgt) ++t;  // skip the original target
    c.tgt = t;
  }
  return out;
}

SyntheticScene generate_scene(const SceneConfig& cfg) {
  cfg.validate();
  Xorshift64Star rng(cfg.seed);
  const std::size_t n = cfg.n_points;

  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const std::vector<Vec3> base = sample_base_cloud(rng, 2 * n);
    const Vec3 dir = random_unit(rng);
    std::vector<std::size_t> order(base.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return dot(base[a], dir) < dot(base[b], dir);
    });

    RigidTransform gt;
    gt.rotation = random_rotation(rng);
    gt.translation = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const std::uint64_t noise_seed = rng.next();
    const std::uint64_t clutter_seed = rng.next();

    // Builds both clouds for a given shared count; noise streams restart
    // so that every candidate sees the same perturbations.
    auto build = [&](std::size_t shared, Crops& crops, PointCloud& src, PointCloud& tgt,
                     std::vector<Vec3>& clean, std::vector<char>& clutter) {
      crops = make_crops(order, n, shared);
      src.points.clear();
      tgt.points.clear();
      clean.clear();
      for (std::size_t i : crops.src) src.points.push_back(base[i]);
      Xorshift64Star noise(noise_seed);
      for (std::size_t i : crops.tgt) {
        clean.push_back(gt.apply(base[i]));
        tgt.points.push_back(clean.back() + bounded_noise(noise, cfg.noise_sigma));
      }
      clutter.assign(n, 0);
      const auto k = static_cast<std::size_t>(std::llround(cfg.outlier_fraction * static_cast<double>(n)));
      Xorshift64Star crng(clutter_seed);
      std::vector<std::size_t> idx(n);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + crng.below(n - i);
        std::swap(idx[i], idx[j]);
        const Vec3 r{crng.uniform(-kHalfCube, kHalfCube), crng.uniform(-kHalfCube, kHalfCube),
                     crng.uniform(-kHalfCube, kHalfCube)};
        tgt.points[idx[i]] = gt.apply(r);
        clean[idx[i]] = tgt.points[idx[i]];
        clutter[idx[i]] = 1;
      }
    };

    Crops crops;
    PointCloud src, tgt;
    std::vector<Vec3> clean;  // target before coordinate noise
    std::vector<char> clutter;
    // Measured overlap grows with the shared count; bisect for the target.
    std::size_t lo = 0, hi = n;
    std::size_t best_shared = 0;
    double best_err = std::numeric_limits<double>::infinity();
    if (cfg.overlap_fraction >= 1.0) {
      // Identical crops; nearby non-shared points would also pass the radius test.
      lo = hi = best_shared = n;
      best_err = 0.0;
    }
    for (int step = 0; step < 14 && lo <= hi && best_err > 0.0; ++step) {
      const std::size_t mid = (lo + hi) / 2;
      build(mid, crops, src, tgt, clean, clutter);
      const double measured = measure_overlap(src.points, tgt.points, gt);
      const double err = measured - cfg.overlap_fraction;
      if (std::abs(err) < best_err) {
        best_err = std::abs(err);
        best_shared = mid;
      }
      if (std::abs(err) < 0.005) break;
      if (err < 0) lo = mid + 1;
      else if (mid == 0) break;
      else hi = mid - 1;
    }
    if (best_err > kOverlapTolerance) continue;

    build(best_shared, crops, src, tgt, clean, clutter);
    SyntheticScene scene;
    scene.config = cfg;
    scene.gt = gt;
    scene.measured_overlap = measure_overlap(src.points, tgt.points, gt);

    // Shared base points give the ground-truth pairing.
    scene.gt_correspondences.level = CorrespondenceLevel::kDense;
    for (std::size_t a = 0, b = 0; a < crops.src.size() && b < crops.tgt.size();) {
      if (crops.src[a] < crops.tgt[b]) ++a;
      else if (crops.src[a] > crops.tgt[b]) ++b;
      else {
        if (!clutter[b]) scene.gt_correspondences.pairs.push_back({a, b, 1.0, kNoPatch});
        ++a;
        ++b;
      }
    }

    // Descriptors come from the noise-free base scene, so a shared point
    // carries the same raw profile in both crops; clutter rows are profiled
    // against the clean target and whitened with the same map.
    const Matrix base_raw = neighbor_distances(base, cfg.feature_dim);
    const Whitening white = fit_whitening(base_raw);
    Matrix src_f = white.apply(gather_rows(base_raw, crops.src));
    Matrix tgt_f = white.apply(gather_rows(base_raw, crops.tgt));
    if (std::find(clutter.begin(), clutter.end(), 1) != clutter.end()) {
      const Matrix clutter_f = white.apply(neighbor_distances(clean, cfg.feature_dim));
      for (std::size_t i = 0; i < n; ++i) {
        if (!clutter[i]) continue;
        std::copy(clutter_f.row(i).begin(), clutter_f.row(i).end(), tgt_f.row(i).begin());
      }
    }
    add_feature_noise(src_f, cfg.feature_noise_sigma, derive_seed(cfg.seed, 101));
    add_feature_noise(tgt_f, cfg.feature_noise_sigma, derive_seed(cfg.seed, 102));
    src.features = std::move(src_f);
    tgt.features = std::move(tgt_f);

    scene.src_super = build_superpoints(src.points, *src.features, cfg.n_superpoints);
    scene.tgt_super = build_superpoints(tgt.points, *tgt.features, cfg.n_superpoints);
    const ImageGridConfig grid{cfg.image_rows, cfg.image_cols, cfg.focal};
    scene.src_img = synth_image_grid(src.points, *src.features, grid);
    scene.tgt_img = synth_image_grid(tgt.points, *tgt.features, grid);
    scene.overlap_table = superpoint_overlap_table(src.points, tgt.points, scene.src_super,
                                                   scene.tgt_super, gt);
    scene.src = std::move(src);
    scene.tgt = std::move(tgt);
    return scene;
  }
  throw Error("cannot reach overlap_fraction " + std::to_string(cfg.overlap_fraction) +
              " after " + std::to_string(kMaxAttempts) + " attempts");
}

void export_scene(const SyntheticScene& scene, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir + ": " + ec.message());
  const std::filesystem::path root(dir);
  write_ply((root / "src.ply").string(), scene.src, PlyScalar::kFloat64);
  write_ply((root / "tgt.ply").string(), scene.tgt, PlyScalar::kFloat64);
  write_text_file((root / "gt.json").string(), transform_to_json(scene.gt));
  write_text_file((root / "meta.json").string(), scene_config_to_json(scene.config));
}

SyntheticScene import_scene(const std::string& dir) {
  const std::filesystem::path root(dir);
  const SceneConfig cfg = scene_config_from_json(read_text_file((root / "meta.json").string()));
  const RigidTransform gt = transform_from_json(read_text_file((root / "gt.json").string()));
  const PointCloud src = read_ply((root / "src.ply").string());
  const PointCloud tgt = read_ply((root / "tgt.ply").string());
  SyntheticScene scene = generate_scene(cfg);
  if (scene.gt != gt || scene.src.points != src.points || scene.tgt.points != tgt.points)
    throw Error("scene files in " + dir + " do not match meta.json");
  return scene;
}

}  // namespace cmha
