//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "molsearch/error.h"

namespace molsearch::diff {

enum class DiffErrc {
  kShapeMismatch,
  kUnboundLeaf,
  kNonScalarOutput,
  kNonDifferentiableOp,
  kInvalidArgument,
};

using DiffError = CodedError<DiffErrc>;

// Dense row-major matrix of doubles. Vectors are 1 x n, scalars 1 x 1.
class Tensor {
public:
  Tensor() = default;

  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) { }

  Tensor(std::size_t rows, std::size_t cols, std::vector<double> data);

  // Row-wise literal: Tensor::from_rows({{1, 2}, {3, 4}}).
  static Tensor
  from_rows(std::initializer_list<std::initializer_list<double>> rows);

  static Tensor scalar(double v) { return Tensor(1, 1, v); }

  static Tensor row(std::vector<double> v) {
    const std::size_t n = v.size();
    return Tensor(1, n, std::move(v));
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  std::vector<std::size_t> shape() const { return { rows_, cols_ }; }
  bool same_shape(const Tensor &o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  double &operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }
  double &operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Value of a 1 x 1 tensor.
  double item() const;

  double *data() { return data_.data(); }
  const double *data() const { return data_.data(); }
  const std::vector<double> &values() const { return data_; }
  std::vector<double> &values() { return data_; }

  double *row_ptr(std::size_t r) { return data_.data() + r * cols_; }
  const double *row_ptr(std::size_t r) const {
    return data_.data() + r * cols_;
  }

  bool operator==(const Tensor &) const = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

std::string shape_string(std::size_t rows, std::size_t cols);

}  // namespace molsearch::diff
