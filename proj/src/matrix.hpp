#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fsgn {

/// Dense row-major matrix of 64-bit reals. All shapes in this project are
/// small (time axis <= 75, channel axis <= a few hundred), so every operation
/// is direct O(n^2)/O(n^3) arithmetic with no sparsity or batching.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix transpose(const Matrix& m);

/// out = a * b; shapes must conform.
Matrix matmul(const Matrix& a, const Matrix& b);

/// out = m * w + bias, the bias broadcast over rows.
Matrix affine(const Matrix& m, const Matrix& w, std::span<const double> bias);

/// Orthonormal DCT-II applied independently to each column (along the row
/// axis, which is time everywhere in this project). Coefficient k of a
/// length-N column x is s_k * sum_n x_n cos(pi (2n+1) k / 2N) with
/// s_0 = sqrt(1/N) and s_k = sqrt(2/N) otherwise.
Matrix dct(const Matrix& m);

/// Exact inverse of dct (orthonormal DCT-III per column).
Matrix idct(const Matrix& m);

/// max |a - b| over all entries; shapes must match.
double max_abs_diff(const Matrix& a, const Matrix& b);

bool all_finite(const Matrix& m);

}  // namespace fsgn
