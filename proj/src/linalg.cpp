#include "saekit/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "saekit/errors.hpp"
#include "saekit/parallel.hpp"

namespace saekit::linalg {

namespace {

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, float fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("matrix data length " + std::to_string(data_.size()) + " != " +
                     std::to_string(rows) + "*" + std::to_string(cols));
  }
}

void Matrix::fill(float v) { std::fill(data_.begin(), data_.end(), v); }

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + shape_str(a) + " x " + shape_str(b));
  }
  Matrix c(a.rows(), b.cols());
  const std::size_t inner = a.cols();
  const std::size_t n = b.cols();
  // i-k-j order: the innermost loop is an axpy over a contiguous row of b,
  // which vectorizes without reassociating any sum.
  parallel_for(a.rows(), [&](std::size_t r0, std::size_t r1) {
    for (std::size_t i = r0; i < r1; ++i) {
      float* out = c.row(i).data();
      const float* ai = a.row(i).data();
      for (std::size_t k = 0; k < inner; ++k) {
        const float s = ai[k];
        if (s == 0.0f) continue;
        const float* bk = b.row(k).data();
        for (std::size_t j = 0; j < n; ++j) out[j] += s * bk[j];
      }
    }
  });
  return c;
}

Matrix matmul_transposed(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_transposed: " + shape_str(a) + " x (" + shape_str(b) + ")^T");
  }
  return matmul(a, transpose(b));
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  constexpr std::size_t kTile = 32;
  for (std::size_t i0 = 0; i0 < a.rows(); i0 += kTile) {
    for (std::size_t j0 = 0; j0 < a.cols(); j0 += kTile) {
      const std::size_t i1 = std::min(i0 + kTile, a.rows());
      const std::size_t j1 = std::min(j0 + kTile, a.cols());
      for (std::size_t i = i0; i < i1; ++i)
        for (std::size_t j = j0; j < j1; ++j) t(j, i) = a(i, j);
    }
  }
  return t;
}

void add_row_vector(Matrix& a, std::span<const float> bias) {
  if (bias.size() != a.cols()) {
    throw ShapeError("add_row_vector: bias length " + std::to_string(bias.size()) +
                     " vs " + std::to_string(a.cols()) + " columns");
  }
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto r = a.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += bias[j];
  }
}

std::vector<float> row_norms(const Matrix& a) {
  std::vector<float> norms(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (float v : a.row(i)) s += static_cast<double>(v) * v;
    norms[i] = static_cast<float>(std::sqrt(s));
  }
  return norms;
}

double variance(std::span<const float> v) {
  if (v.empty()) throw DomainError("variance of empty vector");
  double mean = 0.0;
  for (float x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (float x : v) {
    const double d = x - mean;
    ss += d * d;
  }
  return ss / static_cast<double>(v.size());
}

double dot(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

void axpy(float alpha, std::span<const float> x, std::span<float> y) {
  if (x.size() != y.size()) throw ShapeError("axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

Matrix gather_rows(const Matrix& src, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), src.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= src.rows()) throw ShapeError("gather_rows: row index out of range");
    std::copy_n(src.row(rows[i]).data(), src.cols(), out.row(i).data());
  }
  return out;
}

Matrix slice_rows(const Matrix& src, std::size_t begin, std::size_t end) {
  if (begin > end || end > src.rows()) throw ShapeError("slice_rows: range out of bounds");
  std::vector<float> data(src.data().begin() + static_cast<std::ptrdiff_t>(begin * src.cols()),
                          src.data().begin() + static_cast<std::ptrdiff_t>(end * src.cols()));
  return Matrix(end - begin, src.cols(), std::move(data));
}

bool all_finite(std::span<const float> v) {
  return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
}

}  // namespace saekit::linalg
