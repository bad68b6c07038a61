#pragma once

#include <iosfwd>
#include <string>

#include "cmha/geometry.hpp"

namespace cmha {

enum class PlyScalar {
  kFloat32,  // `property float x`; values rounded to float
  kFloat64,  // `property double x`; 17 significant digits, lossless
};

// ASCII PLY with a `vertex` element carrying x y z. Features are not
// written.
void write_ply(std::ostream& out, const PointCloud& cloud,
               PlyScalar scalar = PlyScalar::kFloat32);
void write_ply(const std::string& path, const PointCloud& cloud,
               PlyScalar scalar = PlyScalar::kFloat32);

// Reads the x y z properties of the `vertex` element of an ASCII PLY.
// Other properties and elements are skipped. Binary encodings are rejected.
PointCloud read_ply(std::istream& in);
PointCloud read_ply(const std::string& path);

}  // namespace cmha
