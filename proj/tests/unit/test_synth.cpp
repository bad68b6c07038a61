#include <algorithm>
#include <cmath>
#include <filesystem>

#include "cmha/error.hpp"
#include "cmha/ply.hpp"
#include "cmha/synth.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace cmha;
using cmha::test::random_points;

namespace {

SceneConfig small_config(std::uint64_t seed, double overlap = 0.5) {
  SceneConfig cfg;
  cfg.n_points = 400;
  cfg.n_superpoints = 16;
  cfg.overlap_fraction = overlap;
  cfg.seed = seed;
  return cfg;
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("cmha_unit_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("SceneConfig validation") {
  SceneConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.overlap_fraction = 1.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.n_superpoints = cfg.n_points + 1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.feature_dim = cfg.n_points;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.image_rows = 1;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("random_rotation is a proper rotation and roughly uniform") {
  Xorshift64Star rng(1);
  double mean_trace = 0.0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    RigidTransform t;
    t.rotation = random_rotation(rng);
    CHECK(t.is_valid());
    mean_trace += (t.rotation[0][0] + t.rotation[1][1] + t.rotation[2][2]) / n;
  }
  // The trace of a Haar-random rotation has mean 0 and standard deviation 1.
  CHECK(std::abs(mean_trace) < 0.1);
}

TEST_CASE("neighbor_distances matches a brute-force scan") {
  Xorshift64Star rng(2);
  const auto pts = random_points(rng, 30);
  const Matrix nd = neighbor_distances(pts, 5);
  REQUIRE(nd.rows() == 30);
  REQUIRE(nd.cols() == 5);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::vector<double> d;
    for (std::size_t j = 0; j < pts.size(); ++j)
      if (j != i) d.push_back(distance(pts[i], pts[j]));
    std::sort(d.begin(), d.end());
    for (std::size_t k = 0; k < 5; ++k) CHECK(nd(i, k) == doctest::Approx(d[k]).epsilon(1e-12));
  }
  CHECK_THROWS_AS(neighbor_distances(pts, 0), Error);
  CHECK_THROWS_AS(neighbor_distances(pts, 30), Error);
}

TEST_CASE("fit_whitening leaves zero mean and near-identity covariance") {
  Xorshift64Star rng(3);
  Matrix x(500, 4);
  for (std::size_t i = 0; i < 500; ++i) {
    const double a = rng.gaussian(), b = rng.gaussian();
    x(i, 0) = 3.0 * a + 1.0;
    x(i, 1) = a + 0.5 * b + 0.3 * rng.gaussian();
    x(i, 2) = rng.gaussian() * 0.1;
    x(i, 3) = b - 2.0;
  }
  const Whitening w = fit_whitening(x, 0.0);
  const Matrix y = w.apply(x);
  for (std::size_t a = 0; a < 4; ++a) {
    double mean = 0.0;
    for (std::size_t i = 0; i < 500; ++i) mean += y(i, a) / 500.0;
    CHECK(std::abs(mean) < 1e-10);
    for (std::size_t b = 0; b < 4; ++b) {
      double c = 0.0;
      for (std::size_t i = 0; i < 500; ++i) c += y(i, a) * y(i, b) / 500.0;
      CHECK(c == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-8).scale(1.0));
    }
  }
  CHECK_THROWS_AS(w.apply(Matrix(2, 3)), Error);
  CHECK_THROWS_AS(fit_whitening(Matrix(1, 3)), Error);
}

TEST_CASE("synth_pair_features: rigid-invariant and shared whitening") {
  Xorshift64Star rng(4);
  const auto src = random_points(rng, 80);
  const RigidTransform t = test::random_transform(rng, 3.0);
  std::vector<Vec3> tgt;
  for (const Vec3& p : src) tgt.push_back(t.apply(p));
  const auto [fs, ft] = synth_pair_features(src, tgt, 6);
  CHECK(max_abs_diff(fs, ft) < 1e-9);

  const Matrix a = synth_features(src, 6, 0.0, 1);
  const Matrix b = synth_features(tgt, 6, 0.0, 1);
  CHECK(max_abs_diff(a, b) < 1e-9);
  CHECK(max_abs_diff(synth_features(src, 6, 0.1, 1), a) > 0.0);
}

TEST_CASE("farthest_point_sampling") {
  const std::vector<Vec3> pts{{0, 0, 0}, {0.1, 0, 0}, {5, 0, 0}, {2.4, 0, 0}};
  CHECK(farthest_point_sampling(pts, 3) == std::vector<std::size_t>{0, 2, 3});
  CHECK(farthest_point_sampling(pts, 1) == std::vector<std::size_t>{0});
  CHECK(farthest_point_sampling(pts, 9).size() == 4);
  CHECK(farthest_point_sampling({}, 3).empty());
}

TEST_CASE("build_superpoints and group_mean_features") {
  Xorshift64Star rng(5);
  const auto pts = random_points(rng, 60);
  const Matrix feats = test::random_matrix(rng, 60, 4);
  const SuperpointSet sp = build_superpoints(pts, feats, 8);
  REQUIRE(sp.size() == 8);
  CHECK(sp.features.rows() == 8);
  std::size_t total = 0;
  for (std::size_t k = 0; k < 8; ++k) {
    total += sp.groups[k].size();
    REQUIRE_FALSE(sp.groups[k].empty());
    for (std::size_t c = 0; c < 4; ++c) {
      double mean = 0.0;
      for (std::size_t i : sp.groups[k]) mean += feats(i, c);
      mean /= static_cast<double>(sp.groups[k].size());
      CHECK(sp.features(k, c) == doctest::Approx(mean).epsilon(1e-12));
    }
  }
  CHECK(total == 60);
  const Matrix empty_mean = group_mean_features(feats, {{}, {0}});
  CHECK(empty_mean(0, 0) == 0.0);
  CHECK(empty_mean(1, 2) == feats(0, 2));
}

TEST_CASE("synth_image_grid") {
  // Two points straight ahead of the camera land in the central cells.
  const std::vector<Vec3> pts{{0.01, 0.01, 0}, {-0.01, -0.01, 0}};
  const Matrix feats{{1, 2}, {3, 4}};
  const ImageGridConfig grid{4, 4, 500.0};
  const ImagePatches img = synth_image_grid(pts, feats, grid);
  REQUIRE(img.features.rows() == 16);
  CHECK(img.pixels.rows() == 16);
  const auto cells = image_cell_of_points(pts, grid);
  REQUIRE(cells.size() == 2);
  CHECK(cells[0] != cells[1]);
  CHECK(img.features(static_cast<std::size_t>(cells[0]), 0) == 1.0);
  CHECK(img.features(static_cast<std::size_t>(cells[1]), 1) == 4.0);
  // Cell centers cover [0, 2f] in both directions.
  CHECK(img.pixels(0, 0) == doctest::Approx(125.0));
  CHECK(img.pixels(0, 1) == doctest::Approx(125.0));
}

TEST_CASE("superpoint_overlap_table") {
  const std::vector<Vec3> src{{0, 0, 0}, {0.01, 0, 0}, {5, 0, 0}};
  const std::vector<Vec3> tgt{{0, 0, 0}, {5, 0, 0.01}};
  SuperpointSet ss, ts;
  ss.coords = {{0, 0, 0}, {5, 0, 0}};
  ss.groups = {{0, 1}, {2}};
  ts.coords = {{0, 0, 0}, {5, 0, 0}};
  ts.groups = {{0}, {1}};
  const Matrix o = superpoint_overlap_table(src, tgt, ss, ts, RigidTransform::identity());
  CHECK(o == Matrix{{1.0, 0.0}, {0.0, 1.0}});
}

TEST_CASE("corrupt_correspondences") {
  CorrespondenceSet c;
  for (std::size_t i = 0; i < 100; ++i) c.pairs.push_back({i, i, 1.0});
  const CorrespondenceSet bad = corrupt_correspondences(c, 0.7, 100, 9);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    CHECK(bad.pairs[i].src == i);
    CHECK(bad.pairs[i].tgt < 100);
    changed += bad.pairs[i].tgt != i;
  }
  CHECK(changed == 70);
  CHECK(corrupt_correspondences(c, 0.7, 100, 9).pairs == bad.pairs);
  CHECK(corrupt_correspondences(c, 0.0, 100, 9).pairs == c.pairs);
  CHECK_THROWS_AS(corrupt_correspondences(c, 1.5, 100, 9), Error);
}

TEST_CASE("generate_scene") {
  const SyntheticScene s = generate_scene(small_config(7));
  CHECK(s.src.size() == 400);
  CHECK(s.tgt.size() == 400);
  CHECK(s.gt.is_valid());
  CHECK(std::abs(s.measured_overlap - 0.5) <= 0.05);
  CHECK(s.measured_overlap == measure_overlap(s.src.points, s.tgt.points, s.gt));
  REQUIRE(s.src.features);
  CHECK(s.src.features->cols() == 24);
  CHECK(s.src_super.size() == 16);
  CHECK(s.overlap_table.rows() == 16);
  CHECK(s.overlap_table.cols() == 16);
  CHECK(s.src_img.features.rows() == 64);

  // Ground-truth pairs are shared base points: bounded noise apart, with
  // identical descriptors.
  REQUIRE(s.gt_correspondences.size() > 50);
  for (const auto& c : s.gt_correspondences.pairs) {
    CHECK(distance(s.gt.apply(s.src.points[c.src]), s.tgt.points[c.tgt]) <= 3.0 * 0.01 + 1e-12);
    for (std::size_t k = 0; k < 24; ++k) CHECK((*s.src.features)(c.src, k) == (*s.tgt.features)(c.tgt, k));
  }

  const SyntheticScene again = generate_scene(small_config(7));
  CHECK(again.src.points == s.src.points);
  CHECK(again.tgt.points == s.tgt.points);
  CHECK(*again.tgt.features == *s.tgt.features);
  CHECK(generate_scene(small_config(8)).src.points != s.src.points);
}

TEST_CASE("generate_scene honors overlap, clutter and descriptor noise") {
  for (double overlap : {0.15, 0.8, 1.0}) {
    const SyntheticScene s = generate_scene(small_config(11, overlap));
    CHECK(std::abs(s.measured_overlap - overlap) <= 0.05);
  }
  SceneConfig cfg = small_config(12);
  cfg.outlier_fraction = 0.25;
  cfg.feature_noise_sigma = 0.05;
  const SyntheticScene s = generate_scene(cfg);
  const SyntheticScene clean = generate_scene(small_config(12));
  CHECK(s.gt_correspondences.size() < clean.gt_correspondences.size());
  CHECK(max_abs_diff(*s.src.features, *clean.src.features) > 0.0);
  CHECK(max_abs_diff(*s.src.features, *clean.src.features) < 0.5);
}

TEST_CASE("export_scene / import_scene round trip") {
  const auto dir = scratch_dir("scene");
  const SyntheticScene s = generate_scene(small_config(13));
  export_scene(s, dir.string());
  for (const char* f : {"src.ply", "tgt.ply", "gt.json", "meta.json"})
    CHECK(std::filesystem::exists(dir / f));
  const SyntheticScene back = import_scene(dir.string());
  CHECK(back.gt == s.gt);
  CHECK(back.tgt.points == s.tgt.points);

  // A tampered cloud is rejected.
  const SyntheticScene other = generate_scene(small_config(14));
  write_ply((dir / "src.ply").string(), other.src, PlyScalar::kFloat64);
  CHECK_THROWS_AS(import_scene(dir.string()), Error);
  CHECK_THROWS_WITH_AS(import_scene((dir / "missing").string()), doctest::Contains("cannot read"), Error);
  std::filesystem::remove_all(dir);
}
