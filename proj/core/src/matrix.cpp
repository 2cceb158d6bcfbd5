#include "qhsvm/matrix.hpp"

#include <algorithm>

#include "qhsvm/errors.hpp"

namespace qhsvm {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                     " does not match " + std::to_string(rows_) + "x" +
                     std::to_string(cols_));
  }
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= rows_) {
      throw IndexError("row index " + std::to_string(indices[k]) + " out of range");
    }
    std::ranges::copy(row(indices[k]), out.row(k).begin());
  }
  return out;
}

Matrix Matrix::select_cols(std::span<const std::size_t> indices) const {
  for (std::size_t c : indices) {
    if (c >= cols_) {
      throw IndexError("column index " + std::to_string(c) + " out of range");
    }
  }
  Matrix out(rows_, indices.size());
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t k = 0; k < indices.size(); ++k) {
      out(r, k) = (*this)(r, indices[k]);
    }
  }
  return out;
}

}  // namespace qhsvm
