#include "sentops/matrix.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace sentops {

void Matrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && data_.empty()) cols_ = values.size();
  if (values.size() != cols_) throw std::invalid_argument("Matrix::append_row: width mismatch");
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

std::size_t count_distinct_rows(const Matrix& m) {
  std::vector<std::size_t> order(m.rows());
  std::iota(order.begin(), order.end(), 0);
  const auto less = [&](std::size_t i, std::size_t j) {
    const auto a = m.row(i);
    const auto b = m.row(j);
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
  };
  std::sort(order.begin(), order.end(), less);
  std::size_t distinct = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i == 0 || less(order[i - 1], order[i])) ++distinct;
  }
  return distinct;
}

}  // namespace sentops
