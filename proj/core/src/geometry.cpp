#include "cmha/geometry.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

#include "cmha/error.hpp"

namespace cmha {

Mat3 mat3_identity() { return {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}; }

Mat3 mat3_mul(const Mat3& a, const Mat3& b) {
  Mat3 c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
  return c;
}

Mat3 mat3_transpose(const Mat3& a) {
  Mat3 t{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) t[i][j] = a[j][i];
  return t;
}

Vec3 mat3_apply(const Mat3& a, const Vec3& v) {
  return {a[0][0] * v.x + a[0][1] * v.y + a[0][2] * v.z,
          a[1][0] * v.x + a[1][1] * v.y + a[1][2] * v.z,
          a[2][0] * v.x + a[2][1] * v.y + a[2][2] * v.z};
}

double mat3_det(const Mat3& a) {
  return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
         a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
         a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
}

Mat3 axis_angle(const Vec3& axis, double angle) {
  const double n = norm(axis);
  if (n == 0.0) return mat3_identity();
  const Vec3 k = axis * (1.0 / n);
  const double c = std::cos(angle), s = std::sin(angle), v = 1.0 - c;
  return {{{c + k.x * k.x * v, k.x * k.y * v - k.z * s, k.x * k.z * v + k.y * s},
           {k.y * k.x * v + k.z * s, c + k.y * k.y * v, k.y * k.z * v - k.x * s},
           {k.z * k.x * v - k.y * s, k.z * k.y * v + k.x * s, c + k.z * k.z * v}}};
}

bool RigidTransform::is_valid(double tol) const {
  const Mat3 rtr = mat3_mul(mat3_transpose(rotation), rotation);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (!std::isfinite(rotation[i][j])) return false;
      if (std::abs(rtr[i][j] - (i == j ? 1.0 : 0.0)) > tol) return false;
    }
  }
  if (!std::isfinite(translation.x) || !std::isfinite(translation.y) ||
      !std::isfinite(translation.z))
    return false;
  return std::abs(mat3_det(rotation) - 1.0) <= tol;
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return {mat3_mul(a.rotation, b.rotation),
          mat3_apply(a.rotation, b.translation) + a.translation};
}

RigidTransform invert(const RigidTransform& t) {
  const Mat3 rt = mat3_transpose(t.rotation);
  return {rt, mat3_apply(rt, t.translation) * -1.0};
}

bool PointCloud::is_valid() const {
  for (const Vec3& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
      return false;
  }
  return !features || features->rows() == points.size();
}

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& t) {
  PointCloud out;
  out.points.reserve(cloud.points.size());
  for (const Vec3& p : cloud.points) out.points.push_back(t.apply(p));
  out.features = cloud.features;
  return out;
}

Vec3 centroid(std::span<const Vec3> points) {
  Vec3 c{};
  if (points.empty()) return c;
  for (const Vec3& p : points) c += p;
  return c * (1.0 / static_cast<double>(points.size()));
}

std::vector<std::size_t> nearest_superpoint_labels(
    std::span<const Vec3> points, std::span<const Vec3> superpoints) {
  if (superpoints.empty()) throw Error("no superpoints");
  std::vector<std::size_t> labels(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t k = 0; k < superpoints.size(); ++k) {
      const double d = squared_distance(points[i], superpoints[k]);
      if (d < best) {  // strict: the lowest index keeps ties
        best = d;
        arg = k;
      }
    }
    labels[i] = arg;
  }
  return labels;
}

std::vector<std::vector<std::size_t>> group_by_nearest_superpoint(
    std::span<const Vec3> points, std::span<const Vec3> superpoints) {
  const auto labels = nearest_superpoint_labels(points, superpoints);
  std::vector<std::vector<std::size_t>> groups(superpoints.size());
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
  return groups;
}

double rotation_angle_deg(const Mat3& r) {
  // atan2(sin, cos) instead of acos((tr - 1) / 2): same angle, but accurate
  // near 0 and 180 degrees. For a bitwise-symmetric r the sine term is
  // exactly zero.
  const double trace = r[0][0] + r[1][1] + r[2][2];
  const Vec3 skew{r[2][1] - r[1][2], r[0][2] - r[2][0], r[1][0] - r[0][1]};
  const double cos_term = std::clamp(trace - 1.0, -2.0, 2.0);
  return std::atan2(norm(skew), cos_term) * 180.0 / std::numbers::pi;
}

TransformErrors transform_errors(const RigidTransform& estimated,
                                 const RigidTransform& ground_truth) {
  TransformErrors e;
  e.rre_deg = rotation_angle_deg(
      mat3_mul(mat3_transpose(ground_truth.rotation), estimated.rotation));
  e.rte = distance(estimated.translation, ground_truth.translation);
  return e;
}

}  // namespace cmha
