#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace saekit::linalg {

/// Dense row-major f32 matrix. Rows are contiguous, so a decoder row (one
/// dictionary embedding) is a plain span.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, float fill = 0.0f);
  Matrix(std::size_t rows, std::size_t cols, std::vector<float> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  float& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  float operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<float> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const float> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  void fill(float v);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

/// a[m×k] · b[k×n]. Throws ShapeError on inner-dimension mismatch. Output rows
/// are computed independently, so results do not depend on the thread count.
Matrix matmul(const Matrix& a, const Matrix& b);

/// a[m×k] · b[n×k]ᵀ without forming the transpose by the caller.
Matrix matmul_transposed(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

/// Adds `bias` to every row of `a`.
void add_row_vector(Matrix& a, std::span<const float> bias);

std::vector<float> row_norms(const Matrix& a);

/// Population variance (divisor n), accumulated in f64. Throws DomainError on
/// empty input.
double variance(std::span<const float> v);

double dot(std::span<const float> a, std::span<const float> b);

/// y += alpha · x
void axpy(float alpha, std::span<const float> x, std::span<float> y);

/// Copies the listed rows of `src` into a new matrix, in order.
Matrix gather_rows(const Matrix& src, std::span<const std::size_t> rows);

/// Rows [begin, end) of `src`.
Matrix slice_rows(const Matrix& src, std::size_t begin, std::size_t end);

bool all_finite(std::span<const float> v);

}  // namespace saekit::linalg
