#include "cmst/matrix.hpp"

#include <Eigen/Core>
#include <cmath>
#include <string>

#include "cmst/errors.hpp"

namespace cmst {

namespace {

using EigenRowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const EigenRowMajor>;
using MutMap = Eigen::Map<EigenRowMajor>;

ConstMap map_of(const Matrix& m) {
  return ConstMap(m.data(), static_cast<Eigen::Index>(m.rows()),
                  static_cast<Eigen::Index>(m.cols()));
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("Matrix: data length " + std::to_string(data_.size()) +
                     " does not match " + std::to_string(rows_) + "x" +
                     std::to_string(cols_));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Matrix& Matrix::operator+=(const Matrix& other) {
  require_shape(other, rows_, cols_, "Matrix::operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  require_shape(other, rows_, cols_, "Matrix::operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double scalar) {
  for (double& v : data_) v *= scalar;
  return *this;
}

Matrix matmul(const Matrix& a, const Matrix& b, bool transpose_a,
              bool transpose_b) {
  const std::size_t a_rows = transpose_a ? a.cols() : a.rows();
  const std::size_t a_cols = transpose_a ? a.rows() : a.cols();
  const std::size_t b_rows = transpose_b ? b.cols() : b.rows();
  const std::size_t b_cols = transpose_b ? b.rows() : b.cols();
  if (a_cols != b_rows) {
    throw ShapeError("matmul: inner dimensions " + std::to_string(a_cols) +
                     " vs " + std::to_string(b_rows));
  }
  Matrix c(a_rows, b_cols);
  MutMap out(c.data(), static_cast<Eigen::Index>(a_rows),
             static_cast<Eigen::Index>(b_cols));
  if (!transpose_a && !transpose_b) {
    out.noalias() = map_of(a) * map_of(b);
  } else if (!transpose_a && transpose_b) {
    out.noalias() = map_of(a) * map_of(b).transpose();
  } else if (transpose_a && !transpose_b) {
    out.noalias() = map_of(a).transpose() * map_of(b);
  } else {
    out.noalias() = map_of(a).transpose() * map_of(b).transpose();
  }
  return c;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> indices) {
  Matrix out(indices.size(), m.cols());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= m.rows()) {
      throw InputError("gather_rows: index " + std::to_string(indices[k]) +
                       " out of range for " + std::to_string(m.rows()) +
                       " rows");
    }
    auto src = m.row(indices[k]);
    auto dst = out.row(k);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return out;
}

Matrix vstack(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("vstack: column mismatch " + std::to_string(a.cols()) +
                     " vs " + std::to_string(b.cols()));
  }
  Matrix out(a.rows() + b.rows(), a.cols());
  std::copy(a.data(), a.data() + a.size(), out.data());
  std::copy(b.data(), b.data() + b.size(), out.data() + a.size());
  return out;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("squared_distance: length mismatch " +
                     std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

void require_shape(const Matrix& m, std::size_t rows, std::size_t cols,
                   const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(rows) +
                     "x" + std::to_string(cols) + ", got " +
                     std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

}  // namespace cmst
