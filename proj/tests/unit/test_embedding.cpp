#include <cmath>
#include <numbers>

#include "cmha/embedding.hpp"
#include "cmha/error.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace cmha;
using cmha::test::random_points;

namespace {

std::vector<Vec3> moved(const std::vector<Vec3>& pts, const RigidTransform& t, double s = 1.0) {
  std::vector<Vec3> out;
  for (const Vec3& p : pts) out.push_back(t.apply(p) * s);
  return out;
}

// Independent loop evaluation of E_ij = relu(sin/cos(d_ij) W_h) W_d + max_r (sin/cos(alpha) W_a).
PairEmbedding loop_oracle(const std::vector<Vec3>& pts, const EmbeddingConfig& cfg,
                          const GeoEmbeddingWeights& w) {
  const std::size_t n = pts.size(), d = cfg.d, k = cfg.k_anchors;
  auto enc = [&](double v) {
    std::vector<double> e(d);
    for (std::size_t c = 0; c < d; ++c) {
      const double arg = v / std::pow(10000.0, static_cast<double>(c - c % 2) / static_cast<double>(d));
      e[c] = c % 2 == 0 ? std::sin(arg) : std::cos(arg);
    }
    return e;
  };
  auto times = [&](const std::vector<double>& row, const Matrix& m) {
    std::vector<double> o(d, 0.0);
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) o[b] += row[a] * m(a, b);
    return o;
  };
  PairEmbedding out(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    // Anchors: k nearest to i, skipping i itself and j, lowest index on ties.
    std::vector<std::size_t> order(n);
    for (std::size_t m = 0; m < n; ++m) order[m] = m;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return squared_distance(pts[i], pts[a]) < squared_distance(pts[i], pts[b]);
    });
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<double> hidden = times(enc(distance(pts[i], pts[j]) / cfg.sigma_d), w.w_hidden);
      for (double& v : hidden) v = std::max(v, 0.0);
      std::vector<double> e = times(hidden, w.w_d);
      std::vector<double> best(d, -1e300);
      std::size_t used = 0;
      for (std::size_t x : order) {
        if (x == i || x == j || used == k) continue;
        ++used;
        const Vec3 a = pts[j] - pts[i], b = pts[x] - pts[i];
        // A zero-length vector has angle 0; atan2(0, -0.0) would give pi.
        const double alpha = norm(a) == 0.0 || norm(b) == 0.0 ? 0.0 : std::atan2(norm(cross(a, b)), dot(a, b));
        const auto proj = times(enc(alpha / cfg.sigma_alpha), w.w_a);
        for (std::size_t c = 0; c < d; ++c) best[c] = std::max(best[c], proj[c]);
      }
      for (std::size_t c = 0; c < d; ++c) out.at(i, j)[c] = e[c] + best[c];
    }
  }
  return out;
}

}  // namespace

TEST_CASE("EmbeddingConfig validation") {
  EmbeddingConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.d = 7;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.sigma_d = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.k_anchors = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("distance_sinusoid") {
  EmbeddingConfig cfg;
  cfg.d = 8;
  cfg.sigma_d = 1.0;
  const std::vector<Vec3> pts{{0, 0, 0}, {1, 0, 0}};
  const PairEmbedding e = distance_sinusoid(pts, cfg);
  for (std::size_t c = 0; c < cfg.d; ++c) CHECK(e.at(0, 0)[c] == (c % 2 == 0 ? 0.0 : 1.0));
  CHECK(e.at(0, 1)[0] == doctest::Approx(0.8414709848).epsilon(1e-10));
  CHECK(e.at(0, 1)[1] == doctest::Approx(std::cos(1.0)));
  CHECK(e.at(0, 1)[2] == doctest::Approx(std::sin(1.0 / 10.0)));

  Xorshift64Star rng(1);
  const auto many = random_points(rng, 12);
  const PairEmbedding m = distance_sinusoid(many, EmbeddingConfig{});
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t j = 0; j < 12; ++j)
      for (std::size_t c = 0; c < m.d(); ++c) CHECK(m.at(i, j)[c] == m.at(j, i)[c]);
}

TEST_CASE("anchor angles and angle embedding") {
  EmbeddingConfig cfg;
  cfg.d = 4;
  cfg.k_anchors = 1;
  cfg.sigma_alpha = std::numbers::pi / 2;

  // i = 0, j = 1 along x; the nearest other point (2) is on the x axis too.
  const std::vector<Vec3> collinear{{0, 0, 0}, {2, 0, 0}, {1, 0, 0}};
  CHECK(anchor_angles(collinear, 1)[(0 * 3 + 1) * 1 + 0] == 0.0);
  CHECK(angle_embedding(collinear, cfg).at(0, 1, 0)[0] == 0.0);

  const std::vector<Vec3> perp{{0, 0, 0}, {2, 0, 0}, {0, 1, 0}};
  CHECK(anchor_angles(perp, 1)[1] == doctest::Approx(std::numbers::pi / 2));
  CHECK(angle_embedding(perp, cfg).at(0, 1, 0)[0] == doctest::Approx(0.8414709848).epsilon(1e-10));

  // Coincident points give a zero-length vector and angle 0.
  const std::vector<Vec3> dup{{0, 0, 0}, {0, 0, 0}, {1, 0, 0}};
  CHECK(anchor_angles(dup, 1)[1] == 0.0);

  CHECK_THROWS_AS(anchor_angles(perp, 2), Error);
  cfg.k_anchors = 3;
  CHECK_THROWS_AS(angle_embedding(perp, cfg), Error);
}

TEST_CASE("angles are invariant under rotation") {
  Xorshift64Star rng(2);
  const auto pts = random_points(rng, 15);
  const auto a = anchor_angles(pts, 3);
  for (int trial = 0; trial < 5; ++trial) {
    const auto b = anchor_angles(moved(pts, test::random_transform(rng)), 3);
    for (std::size_t t = 0; t < a.size(); ++t) CHECK(std::abs(a[t] - b[t]) < 1e-9);
  }
}

TEST_CASE("pair_geometric_embedding") {
  Xorshift64Star rng(3);
  EmbeddingConfig cfg;
  cfg.d = 8;
  const auto pts = random_points(rng, 10);
  GeoEmbeddingWeights w = init_geo_weights(cfg.d, 5);

  SUBCASE("matches a loop oracle") {
    CHECK(pair_geometric_embedding(pts, cfg, w).max_abs_diff(loop_oracle(pts, cfg, w)) < 1e-10);
  }
  SUBCASE("single anchor: the max is the identity") {
    cfg.k_anchors = 1;
    const PairEmbedding e = pair_geometric_embedding(pts, cfg, w);
    const PairEmbedding dist = distance_embedding(pts, cfg, w);
    const AngleEmbedding ang = angle_embedding(pts, cfg);
    for (std::size_t c = 0; c < cfg.d; ++c) {
      double expect = 0.0;
      for (std::size_t a = 0; a < cfg.d; ++a)
        expect += dist.at(2, 7)[a] * w.w_d(a, c) + ang.at(2, 7, 0)[a] * w.w_a(a, c);
      CHECK(e.at(2, 7)[c] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
  SUBCASE("zero angle projection leaves E^D W_D exactly") {
    w.w_a = Matrix(cfg.d, cfg.d);
    const PairEmbedding e = pair_geometric_embedding(pts, cfg, w);
    const PairEmbedding dist = distance_embedding(pts, cfg, w);
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = 0; j < pts.size(); ++j)
        for (std::size_t c = 0; c < cfg.d; ++c) {
          double expect = 0.0;
          for (std::size_t a = 0; a < cfg.d; ++a) expect += dist.at(i, j)[a] * w.w_d(a, c);
          CHECK(e.at(i, j)[c] == expect);
        }
  }
  SUBCASE("swapping i and j keeps the distance channel") {
    const PairEmbedding dist = distance_embedding(pts, cfg, w);
    for (std::size_t c = 0; c < cfg.d; ++c) CHECK(dist.at(1, 4)[c] == dist.at(4, 1)[c]);
  }
}

TEST_CASE("pair_geometric_embedding: rigid invariance, scale breaks it") {
  Xorshift64Star rng(4);
  const EmbeddingConfig cfg;
  const auto pts = random_points(rng, 20);
  const GeoEmbeddingWeights w = init_geo_weights(cfg.d, 11);
  const PairEmbedding base = pair_geometric_embedding(pts, cfg, w);
  for (int trial = 0; trial < 10; ++trial) {
    const auto t = test::random_transform(rng, 10.0);
    CHECK(base.max_abs_diff(pair_geometric_embedding(moved(pts, t), cfg, w)) < 1e-9);
  }
  const PairEmbedding scaled = pair_geometric_embedding(moved(pts, RigidTransform::identity(), 2.0), cfg, w);
  CHECK(base.max_abs_diff(scaled) > 1e-3);
}

TEST_CASE("absolute_position_embedding") {
  const Matrix origin(1, 3);
  const Matrix e = absolute_position_embedding(origin, 12, 1.0);
  for (std::size_t c = 0; c < 12; ++c) CHECK(e(0, c) == (c % 2 == 0 ? 0.0 : 1.0));

  const Matrix twins{{0.3, -0.2}, {0.3, -0.2}};
  const Matrix t = absolute_position_embedding(twins, 8, 100.0);
  for (std::size_t c = 0; c < 8; ++c) CHECK(t(0, c) == t(1, c));

  const Matrix shifted{{10.3, 19.8}, {10.3, 19.8}};
  CHECK(max_abs_diff(absolute_position_embedding(shifted, 8, 100.0), t) > 1e-3);

  // Axis blocks: the first half encodes x, the second half y.
  const Matrix xy{{1.0, 2.0}};
  const Matrix b = absolute_position_embedding(xy, 4, 1.0);
  CHECK(b(0, 0) == doctest::Approx(std::sin(1.0)));
  CHECK(b(0, 2) == doctest::Approx(std::sin(2.0)));

  CHECK_THROWS_AS(absolute_position_embedding(origin, 8, 1.0), Error);
  CHECK_THROWS_AS(absolute_position_embedding(origin, 12, 0.0), Error);
}
