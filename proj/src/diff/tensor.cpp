//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molsearch/diff/tensor.h"

namespace molsearch::diff {

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw DiffError(DiffErrc::kShapeMismatch,
                    "tensor data of size " + std::to_string(data_.size())
                        + " does not fit shape " + shape_string(rows, cols));
  }
}

Tensor Tensor::from_rows(
    std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto &row: rows) {
    if (row.size() != c)
      throw DiffError(DiffErrc::kShapeMismatch, "ragged tensor literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor(r, c, std::move(data));
}

double Tensor::item() const {
  if (rows_ != 1 || cols_ != 1) {
    throw DiffError(DiffErrc::kShapeMismatch,
                    "item() on tensor of shape " + shape_string(rows_, cols_));
  }
  return data_[0];
}

std::string shape_string(std::size_t rows, std::size_t cols) {
  return "(" + std::to_string(rows) + "," + std::to_string(cols) + ")";
}

}  // namespace molsearch::diff
