#include <cmath>
#include <numbers>
#include <sstream>

#include "cmha/correspondence.hpp"
#include "cmha/error.hpp"
#include "cmha/geometry.hpp"
#include "cmha/metrics.hpp"
#include "cmha/ply.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace cmha;
using cmha::test::random_points;
using cmha::test::random_transform;

TEST_CASE("apply_transform: identity, quarter turn, inverse") {
  Xorshift64Star rng(1);
  PointCloud cloud{random_points(rng, 50), Matrix(50, 2, 0.5)};
  CHECK(apply_transform(cloud, RigidTransform::identity()).points == cloud.points);

  RigidTransform quarter;
  quarter.rotation = axis_angle({0, 0, 1}, std::numbers::pi / 2);
  const Vec3 p = quarter.apply({1, 0, 0});
  CHECK(p.x == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(p.y == doctest::Approx(1.0));
  CHECK(std::abs(p.z) < 1e-15);

  const RigidTransform t = random_transform(rng);
  const PointCloud back = apply_transform(cloud, compose(t, invert(t)));
  for (std::size_t i = 0; i < cloud.size(); ++i) CHECK(distance(back.points[i], cloud.points[i]) < 1e-9);
  REQUIRE(back.features);
  CHECK(*back.features == *cloud.features);
}

TEST_CASE("apply_transform is an isometry") {
  Xorshift64Star rng(2);
  const PointCloud cloud{random_points(rng, 40), std::nullopt};
  const PointCloud moved = apply_transform(cloud, random_transform(rng, 5.0));
  for (std::size_t i = 0; i < cloud.size(); ++i)
    for (std::size_t j = 0; j < cloud.size(); ++j)
      CHECK(std::abs(distance(moved.points[i], moved.points[j]) -
                     distance(cloud.points[i], cloud.points[j])) < 1e-9);
}

TEST_CASE("RigidTransform validity") {
  Xorshift64Star rng(3);
  CHECK(random_transform(rng).is_valid());
  RigidTransform reflect;
  reflect.rotation[2][2] = -1.0;
  CHECK_FALSE(reflect.is_valid());
  RigidTransform scaled;
  scaled.rotation[0][0] = 2.0;
  CHECK_FALSE(scaled.is_valid());
}

TEST_CASE("group_by_nearest_superpoint") {
  const std::vector<Vec3> pts{{0, 0, 0}, {1, 0, 0}};
  const std::vector<Vec3> sp{{0, 0, 0}, {10, 0, 0}};
  const auto groups = group_by_nearest_superpoint(pts, sp);
  REQUIRE(groups.size() == 2);
  CHECK(groups[0] == std::vector<std::size_t>{0, 1});
  CHECK(groups[1].empty());

  const std::vector<Vec3> tie{{5, 0, 0}};
  CHECK(group_by_nearest_superpoint(tie, sp)[0] == std::vector<std::size_t>{0});

  CHECK_THROWS_WITH_AS(group_by_nearest_superpoint(pts, {}), "no superpoints", Error);
}

TEST_CASE("group_by_nearest_superpoint matches a brute-force scan and partitions") {
  Xorshift64Star rng(4);
  const auto pts = random_points(rng, 100);
  const auto sp = random_points(rng, 10);
  const auto groups = group_by_nearest_superpoint(pts, sp);
  std::vector<int> seen(pts.size(), 0);
  std::size_t total = 0;
  for (std::size_t k = 0; k < groups.size(); ++k) {
    for (std::size_t i : groups[k]) {
      ++seen[i];
      ++total;
      std::size_t best = 0;
      for (std::size_t m = 1; m < sp.size(); ++m)
        if (squared_distance(pts[i], sp[m]) < squared_distance(pts[i], sp[best])) best = m;
      CHECK(best == k);
    }
  }
  CHECK(total == pts.size());
  for (int s : seen) CHECK(s == 1);
  const auto labels = nearest_superpoint_labels(pts, sp);
  for (std::size_t k = 0; k < groups.size(); ++k)
    for (std::size_t i : groups[k]) CHECK(labels[i] == k);
}

TEST_CASE("transform_errors") {
  Xorshift64Star rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const RigidTransform t = random_transform(rng);
    const TransformErrors same = transform_errors(t, t);
    CHECK(same.rre_deg == 0.0);
    CHECK(same.rte == 0.0);
  }

  const RigidTransform gt = random_transform(rng);
  RigidTransform est = gt;
  est.rotation = mat3_mul(axis_angle({0.3, -1.0, 0.5}, 10.0 * std::numbers::pi / 180), gt.rotation);
  const TransformErrors ten = transform_errors(est, gt);
  CHECK(ten.rre_deg == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(ten.rte == 0.0);

  for (int trial = 0; trial < 100; ++trial) {
    const RigidTransform a = random_transform(rng);
    const RigidTransform b = random_transform(rng);
    const Mat3 rel = mat3_mul(mat3_transpose(b.rotation), a.rotation);
    const TransformErrors e = transform_errors(a, b);
    CHECK(std::abs(e.rre_deg - test::quaternion_angle_deg(rel)) < 1e-6);
    const TransformErrors r = transform_errors(b, a);
    CHECK(std::abs(e.rre_deg - r.rre_deg) < 1e-9);
    CHECK(e.rte == r.rte);
  }
}

TEST_CASE("correspondence_inlier_ratio") {
  Xorshift64Star rng(6);
  const auto src = random_points(rng, 20);
  const RigidTransform gt = random_transform(rng);
  std::vector<Vec3> tgt;
  for (const Vec3& p : src) tgt.push_back(gt.apply(p));
  CorrespondenceSet corrs;
  for (std::size_t i = 0; i < src.size(); ++i) corrs.pairs.push_back({i, i, 1.0});
  CHECK(correspondence_inlier_ratio(corrs, src, tgt, gt, 0.1).ratio == 1.0);

  for (std::size_t i = 0; i < src.size(); i += 2) tgt[i] += Vec3{1.0, 0, 0};  // 10 * radius
  CHECK(correspondence_inlier_ratio(corrs, src, tgt, gt, 0.1).ratio == 0.5);

  for (Vec3& q : tgt) q += Vec3{rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), 0};
  std::size_t hits = 0;
  for (const auto& c : corrs.pairs) hits += distance(gt.apply(src[c.src]), tgt[c.tgt]) < 0.1;
  CHECK(correspondence_inlier_ratio(corrs, src, tgt, gt, 0.1).ratio ==
        doctest::Approx(static_cast<double>(hits) / 20.0));

  const InlierRatio empty = correspondence_inlier_ratio({}, src, tgt, gt, 0.1);
  CHECK(empty.ratio == 0.0);
  CHECK(empty.empty_input);
}

TEST_CASE("correspondence_rmse") {
  const std::vector<Vec3> src{{0, 0, 0}, {1, 0, 0}};
  const std::vector<Vec3> tgt{{0, 0, 3}, {1, 0, 4}};
  CorrespondenceSet c;
  c.pairs = {{0, 0, 1.0}, {1, 1, 1.0}};
  CHECK(correspondence_rmse(c, src, tgt, RigidTransform::identity()) ==
        doctest::Approx(std::sqrt(12.5)));
  CHECK(correspondence_rmse({}, src, tgt, RigidTransform::identity()) == 0.0);
}

TEST_CASE("MetricsReport validity") {
  MetricsReport m;
  CHECK(m.is_valid());
  m.rr = 1.5;
  CHECK_FALSE(m.is_valid());
  m.rr = 1.0;
  m.rre = -1.0;
  CHECK_FALSE(m.is_valid());
}

TEST_CASE("PLY round trip") {
  Xorshift64Star rng(7);
  const PointCloud cloud{random_points(rng, 30), std::nullopt};

  std::stringstream dbl;
  write_ply(dbl, cloud, PlyScalar::kFloat64);
  CHECK(read_ply(dbl).points == cloud.points);

  std::stringstream flt;
  write_ply(flt, cloud);
  CHECK(flt.str().find("property float x") != std::string::npos);
  const PointCloud back = read_ply(flt);
  REQUIRE(back.size() == cloud.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back.points[i].x == static_cast<double>(static_cast<float>(cloud.points[i].x)));
    CHECK(back.points[i].z == static_cast<double>(static_cast<float>(cloud.points[i].z)));
  }
}

TEST_CASE("PLY reader skips unknown properties and elements") {
  std::istringstream in(
      "ply\nformat ascii 1.0\ncomment made by hand\nelement vertex 2\n"
      "property float nx\nproperty float x\nproperty float y\nproperty uchar red\nproperty float z\n"
      "element face 1\nproperty list uchar int vertex_indices\nend_header\n"
      "9 1 2 255 3\n9 4 5 0 6\n3 0 1 1\n");
  const PointCloud c = read_ply(in);
  REQUIRE(c.size() == 2);
  CHECK(c.points[0] == Vec3{1, 2, 3});
  CHECK(c.points[1] == Vec3{4, 5, 6});
}

TEST_CASE("PLY reader errors") {
  std::istringstream binary("ply\nformat binary_little_endian 1.0\nelement vertex 0\nend_header\n");
  CHECK_THROWS_AS(read_ply(binary), Error);
  std::istringstream truncated(
      "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\n"
      "property float z\nend_header\n1 2 3\n");
  CHECK_THROWS_AS(read_ply(truncated), Error);
  CHECK_THROWS_WITH_AS(read_ply(std::string("/nonexistent/cloud.ply")),
                       doctest::Contains("cannot read"), Error);
}

TEST_CASE("correspondence CSV") {
  CorrespondenceSet set;
  set.pairs = {{3, 4, 0.123456789123}, {0, 1, 1.0 / 3.0}};
  std::stringstream out;
  write_correspondences_csv(out, set);
  CHECK(out.str() == "src_index,tgt_index,confidence\n3,4,0.123456789\n0,1,0.333333333\n");
  const CorrespondenceSet back = read_correspondences_csv(out);
  REQUIRE(back.size() == 2);
  CHECK(back.pairs[0].src == 3);
  CHECK(back.pairs[0].tgt == 4);
  CHECK(back.pairs[1].confidence == doctest::Approx(0.333333333).epsilon(1e-12));
}

TEST_CASE("sort_by_confidence and canonical form") {
  std::vector<Correspondence> pairs{{2, 0, 0.5}, {0, 1, 0.9}, {1, 0, 0.5}, {0, 0, 0.5}};
  sort_by_confidence(pairs);
  CHECK(pairs[0].src == 0);
  CHECK(pairs[0].tgt == 1);
  CHECK(pairs[1] == Correspondence{0, 0, 0.5});
  CHECK(pairs[2] == Correspondence{1, 0, 0.5});
  CHECK(pairs[3] == Correspondence{2, 0, 0.5});
  CorrespondenceSet set;
  set.pairs = pairs;
  CHECK(is_canonical(set));
  set.pairs.push_back({0, 1, 0.1});
  CHECK_FALSE(is_canonical(set));
}
