#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace cmha {

// Dense row-major matrix of doubles. Entries may hold -infinity as a mask
// sentinel (see feature_similarity / softmax_rows); everything else is
// expected to be finite.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
// a * b^T without materializing the transpose.
Matrix matmul_transposed(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
Matrix add(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& m, double s);
// Rows of m selected by index, in the given order.
Matrix gather_rows(const Matrix& m, std::span<const std::size_t> indices);
double max_abs_diff(const Matrix& a, const Matrix& b);

// Row-wise softmax with max subtraction. -inf entries map to exactly 0.
// Throws Error("fully masked row") when a row has no finite entry.
Matrix softmax_rows(const Matrix& scores);

// 3x3 singular value decomposition m = U diag(sigma) V^T with sigma sorted
// descending and nonnegative. Computed with one-sided Jacobi rotations, so U
// and V are orthogonal to machine precision; either may have det -1.
struct Svd3 {
  std::array<std::array<double, 3>, 3> u{};
  std::array<double, 3> sigma{};
  std::array<std::array<double, 3>, 3> v{};
};
Svd3 svd3(const std::array<std::array<double, 3>, 3>& m);

// Eigen-decomposition a = V diag(values) V^T of a symmetric matrix by cyclic
// Jacobi rotations. Eigenvalues ascending; column k of `vectors` pairs with
// values[k]. Throws Error on a non-square input.
struct SymmetricEigen {
  std::vector<double> values;
  Matrix vectors;
};
SymmetricEigen symmetric_eigen(const Matrix& a);

// Query/key/value projections plus the two positional projections used by
// the attention layers. All five are d x d.
struct ProjectionSet {
  Matrix w_q;
  Matrix w_k;
  Matrix w_v;
  Matrix w_g;
  Matrix w_f;
  std::uint64_t seed = 0;

  std::size_t dim() const noexcept { return w_q.rows(); }
};

// Entries uniform in [-1/sqrt(d), 1/sqrt(d)], drawn in the fixed order
// q, k, v, g, f from Xorshift64Star(seed).
ProjectionSet init_projections(std::size_t d, std::uint64_t seed);

// rows x cols matrix with entries uniform in [-1/sqrt(rows), 1/sqrt(rows)].
Matrix uniform_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed);

}  // namespace cmha
