#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "n2a/errors.hpp"
#include "n2a/kernels.hpp"

namespace n2a {

// Dense row-major double matrix. Samples are rows.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  Matrix(std::initializer_list<std::initializer_list<double>> init) {
    rows_ = init.size();
    cols_ = rows_ ? init.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : init) {
      if (r.size() != cols_) throw ShapeError("ragged initializer for Matrix");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Z = X * W^T + b, broadcast over rows. W is (out x in), X is (N x in).
inline Matrix affine_nt(const Matrix& X, const Matrix& W, const std::vector<double>& b) {
  if (X.cols() != W.cols()) throw ShapeError("affine_nt: input width mismatch");
  if (b.size() != W.rows()) throw ShapeError("affine_nt: bias length mismatch");
  const auto& k = kernels::active();
  Matrix Z(X.rows(), W.rows());
  for (std::size_t s = 0; s < X.rows(); ++s) {
    const double* x = X.row(s);
    double* z = Z.row(s);
    for (std::size_t o = 0; o < W.rows(); ++o) z[o] = k.dot(x, W.row(o), X.cols()) + b[o];
  }
  return Z;
}

// C = A * B with A (m x k), B (k x n).
inline Matrix matmul_nn(const Matrix& A, const Matrix& B) {
  if (A.cols() != B.rows()) throw ShapeError("matmul_nn: inner dimension mismatch");
  const auto& k = kernels::active();
  Matrix C(A.rows(), B.cols());
  for (std::size_t i = 0; i < A.rows(); ++i) {
    const double* a = A.row(i);
    double* c = C.row(i);
    for (std::size_t j = 0; j < A.cols(); ++j)
      if (a[j] != 0.0) k.axpy(a[j], B.row(j), c, B.cols());
  }
  return C;
}

// G += Delta^T * A, with Delta (N x out), A (N x in), G (out x in).
inline void accumulate_outer(const Matrix& delta, const Matrix& A, Matrix& G) {
  if (delta.rows() != A.rows() || G.rows() != delta.cols() || G.cols() != A.cols())
    throw ShapeError("accumulate_outer: shape mismatch");
  const auto& k = kernels::active();
  for (std::size_t s = 0; s < delta.rows(); ++s) {
    const double* d = delta.row(s);
    const double* a = A.row(s);
    for (std::size_t o = 0; o < delta.cols(); ++o)
      if (d[o] != 0.0) k.axpy(d[o], a, G.row(o), G.cols());
  }
}

inline std::vector<double> column_sums(const Matrix& m) {
  std::vector<double> s(m.cols(), 0.0);
  const auto& k = kernels::active();
  for (std::size_t i = 0; i < m.rows(); ++i) k.axpy(1.0, m.row(i), s.data(), m.cols());
  return s;
}

}  // namespace n2a
