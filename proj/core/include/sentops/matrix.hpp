#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace sentops {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  /// Appends a row. The first row appended to an empty matrix fixes cols().
  void append_row(std::span<const double> values);

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept;

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) noexcept {
  return std::sqrt(squared_distance(a, b));
}

/// Number of distinct rows (exact floating-point equality).
std::size_t count_distinct_rows(const Matrix& m);

}  // namespace sentops

