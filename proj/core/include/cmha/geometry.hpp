#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "cmha/tensor.hpp"

namespace cmha {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double operator[](std::size_t i) const { return i == 0 ? x : (i == 1 ? y : z); }
  double& operator[](std::size_t i) { return i == 0 ? x : (i == 1 ? y : z); }

  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

  bool operator==(const Vec3&) const = default;
};

inline Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
inline Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
inline Vec3 operator*(Vec3 a, double s) { return a *= s; }
inline Vec3 operator*(double s, Vec3 a) { return a *= s; }
inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline double squared_distance(const Vec3& a, const Vec3& b) {
  const Vec3 d = a - b;
  return dot(d, d);
}
inline double distance(const Vec3& a, const Vec3& b) { return std::sqrt(squared_distance(a, b)); }

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 mat3_identity();
Mat3 mat3_mul(const Mat3& a, const Mat3& b);
Mat3 mat3_transpose(const Mat3& a);
Vec3 mat3_apply(const Mat3& a, const Vec3& v);
double mat3_det(const Mat3& a);
// Rotation of `angle` radians about `axis` (need not be unit length).
Mat3 axis_angle(const Vec3& axis, double angle);

// Rigid motion x -> R x + t.
struct RigidTransform {
  Mat3 rotation = mat3_identity();
  Vec3 translation{};

  static RigidTransform identity() { return {}; }

  Vec3 apply(const Vec3& p) const { return mat3_apply(rotation, p) + translation; }

  // True when R^T R = I and det R = +1, both within `tol`.
  bool is_valid(double tol = 1e-9) const;

  bool operator==(const RigidTransform&) const = default;
};

// (a o b)(x) = a(b(x)).
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform invert(const RigidTransform& t);

struct PointCloud {
  std::vector<Vec3> points;
  // One row per point when present.
  std::optional<Matrix> features;

  std::size_t size() const noexcept { return points.size(); }

  // Finite coordinates and a feature row count that matches the points.
  bool is_valid() const;
};

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& t);
Vec3 centroid(std::span<const Vec3> points);

// Superpoints with their dense-point groups. groups[k] lists the dense
// indices whose nearest superpoint is k; empty groups are kept so indices
// stay aligned with the feature rows.
struct SuperpointSet {
  std::vector<Vec3> coords;
  std::vector<std::vector<std::size_t>> groups;
  Matrix features;

  std::size_t size() const noexcept { return coords.size(); }
};

// Assigns every point to its nearest superpoint (lowest index on ties).
// Returns one group per superpoint. Throws Error("no superpoints").
std::vector<std::vector<std::size_t>> group_by_nearest_superpoint(
    std::span<const Vec3> points, std::span<const Vec3> superpoints);

// Index of the nearest superpoint for each point (the inverse view of the
// groups above).
std::vector<std::size_t> nearest_superpoint_labels(
    std::span<const Vec3> points, std::span<const Vec3> superpoints);

struct TransformErrors {
  double rre_deg = 0.0;
  double rte = 0.0;
};

// Relative rotation error in degrees and translation error in meters.
TransformErrors transform_errors(const RigidTransform& estimated,
                                 const RigidTransform& ground_truth);

// Geodesic angle of a rotation in degrees.
double rotation_angle_deg(const Mat3& r);

}  // namespace cmha
