#include "cmha/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "cmha/error.hpp"
#include "cmha/rng.hpp"

namespace cmha {

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error("matrix data length " + std::to_string(data_.size()) +
                " does not match shape " + std::to_string(rows_) + "x" +
                std::to_string(cols_));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw Error("ragged matrix initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw Error("matmul dimension mismatch: " + shape(a) + " * " + shape(b));
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto o = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const auto br = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) o[j] += aik * br[j];
    }
  }
  return out;
}

Matrix matmul_transposed(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw Error("matmul dimension mismatch: " + shape(a) + " * (" + shape(b) +
                ")^T");
  }
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto ar = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const auto br = b.row(j);
      out(i, j) = std::inner_product(ar.begin(), ar.end(), br.begin(), 0.0);
    }
  }
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

Matrix add(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error("add dimension mismatch: " + shape(a) + " + " + shape(b));
  }
  Matrix out = a;
  auto o = out.data();
  const auto bd = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bd[i];
  return out;
}

Matrix scale(const Matrix& m, double s) {
  Matrix out = m;
  for (double& v : out.data()) v *= s;
  return out;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> indices) {
  Matrix out(indices.size(), m.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= m.rows()) throw Error("gather_rows index out of range");
    std::copy_n(m.row(indices[r]).begin(), m.cols(), out.row(r).begin());
  }
  return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    return std::numeric_limits<double>::infinity();
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  }
  return worst;
}

Matrix softmax_rows(const Matrix& scores) {
  Matrix out(scores.rows(), scores.cols());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    const auto in = scores.row(i);
    auto o = out.row(i);
    double peak = -std::numeric_limits<double>::infinity();
    for (double v : in) peak = std::max(peak, v);
    if (!std::isfinite(peak)) throw Error("fully masked row");
    double total = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      o[j] = std::isinf(in[j]) ? 0.0 : std::exp(in[j] - peak);
      total += o[j];
    }
    for (double& v : o) v /= total;
  }
  return out;
}

Svd3 svd3(const Mat3& m) {
  Mat3 b = m;
  Mat3 v = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  constexpr double kEps = 1e-15;

  for (int sweep = 0; sweep < 64; ++sweep) {
    bool rotated = false;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        double alpha = 0, beta = 0, gamma = 0;
        for (int i = 0; i < 3; ++i) {
          alpha += b[i][p] * b[i][p];
          beta += b[i][q] * b[i][q];
          gamma += b[i][p] * b[i][q];
        }
        if (gamma == 0.0 || std::abs(gamma) <= kEps * std::sqrt(alpha * beta))
          continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (int i = 0; i < 3; ++i) {
          const double bp = b[i][p], bq = b[i][q];
          b[i][p] = c * bp - s * bq;
          b[i][q] = s * bp + c * bq;
          const double vp = v[i][p], vq = v[i][q];
          v[i][p] = c * vp - s * vq;
          v[i][q] = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }

  std::array<double, 3> norms{};
  for (int j = 0; j < 3; ++j) {
    norms[j] = std::sqrt(b[0][j] * b[0][j] + b[1][j] * b[1][j] +
                         b[2][j] * b[2][j]);
  }
  std::array<int, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return norms[x] > norms[y]; });

  Svd3 out;
  std::array<std::array<double, 3>, 3> cols{};  // columns of U, by index
  for (int k = 0; k < 3; ++k) {
    const int j = order[k];
    out.sigma[k] = norms[j];
    for (int i = 0; i < 3; ++i) {
      out.v[i][k] = v[i][j];
      cols[k][i] = b[i][j];
    }
  }

  // Orthonormal U: normalize the leading columns, Gram-Schmidt the second,
  // and complete with a cross product so rank-deficient inputs still get an
  // orthogonal basis.
  const double tiny = 1e-300;
  auto normalize = [](std::array<double, 3>& x) {
    const double n = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    for (double& e : x) e /= n;
    return n;
  };
  std::array<double, 3> u0 = cols[0];
  if (out.sigma[0] <= tiny) {
    out.u = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    return out;
  }
  normalize(u0);
  std::array<double, 3> u1 = cols[1];
  if (out.sigma[1] <= out.sigma[0] * 1e-13) {
    // Any unit vector orthogonal to u0.
    const int axis = std::abs(u0[0]) < 0.9 ? 0 : 1;
    u1 = {0, 0, 0};
    u1[axis] = 1.0;
  }
  const double d01 = u0[0] * u1[0] + u0[1] * u1[1] + u0[2] * u1[2];
  for (int i = 0; i < 3; ++i) u1[i] -= d01 * u0[i];
  normalize(u1);
  std::array<double, 3> u2 = {u0[1] * u1[2] - u0[2] * u1[1],
                              u0[2] * u1[0] - u0[0] * u1[2],
                              u0[0] * u1[1] - u0[1] * u1[0]};
  const double orient =
      u2[0] * cols[2][0] + u2[1] * cols[2][1] + u2[2] * cols[2][2];
  if (orient < 0.0)
    for (double& e : u2) e = -e;
  for (int i = 0; i < 3; ++i) {
    out.u[i][0] = u0[i];
    out.u[i][1] = u1[i];
    out.u[i][2] = u2[i];
  }
  return out;
}

Matrix uniform_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Xorshift64Star rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(-bound, bound);
  return m;
}

ProjectionSet init_projections(std::size_t d, std::uint64_t seed) {
  if (d == 0) throw Error("projection dimension must be >= 1");
  Xorshift64Star rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  auto draw = [&] {
    Matrix m(d, d);
    for (double& v : m.data()) v = rng.uniform(-bound, bound);
    return m;
  };
  ProjectionSet p;
  p.w_q = draw();
  p.w_k = draw();
  p.w_v = draw();
  p.w_g = draw();
  p.w_f = draw();
  p.seed = seed;
  return p;
}

}  // namespace cmha

namespace cmha {

SymmetricEigen symmetric_eigen(const Matrix& a) {
  if (a.rows() != a.cols()) throw Error("symmetric_eigen needs a square matrix");
  const std::size_t n = a.rows();
  Matrix m = a;
  Matrix v = Matrix::identity(n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0, total = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = 0; q < n; ++q) {
        total += m(p, q) * m(p, q);
        if (p != q) off += m(p, q) * m(p, q);
      }
    }
    if (off <= 1e-30 * total || off == 0.0) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = m(p, q);
        if (apq == 0.0) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double mkp = m(k, p), mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double mpk = m(p, k), mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return m(x, x) < m(y, y); });
  SymmetricEigen out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = m(order[k], order[k]);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = v(r, order[k]);
  }
  return out;
}

}  // namespace cmha
