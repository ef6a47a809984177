#include "mtil/numkit/linalg.hpp"

#include <algorithm>

#include "mtil/error.hpp"

namespace mtil {

void Matrix::set_row(std::size_t r, std::span<const double> values) {
  if (r >= rows_ || values.size() != cols_) throw InvalidInput("Matrix::set_row: shape mismatch");
  std::copy(values.begin(), values.end(), data_.begin() + static_cast<std::ptrdiff_t>(r * cols_));
}

void Matrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) throw InvalidInput("Matrix::append_row: width mismatch");
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

}  // namespace mtil
