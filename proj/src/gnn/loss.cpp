//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molsearch/gnn/loss.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace molsearch::gnn {
namespace {
constexpr double kLogFloor = 1e-12;

void check_shapes(std::size_t rows, std::size_t cols, const LabelMatrix &labels,
                  const AssayWeights &weights) {
  if (rows != labels.rows() || cols != labels.assays()
      || weights.alpha.size() != cols || weights.beta.size() != cols)
    throw GnnError(GnnErrc::kShapeMismatch, "loss inputs disagree in shape");
}
}  // namespace

LabelMatrix LabelMatrix::subset(std::span<const std::size_t> rows) const {
  LabelMatrix out(rows.size(), assays_);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(rows[i] * assays_),
                assays_, out.data_.begin() + static_cast<std::ptrdiff_t>(i * assays_));
  }
  return out;
}

void LabelMatrix::append_row(std::span<const std::int8_t> row) {
  if (rows_ == 0 && assays_ == 0)
    assays_ = row.size();
  if (row.size() != assays_)
    throw GnnError(GnnErrc::kShapeMismatch, "label row width");
  data_.insert(data_.end(), row.begin(), row.end());
  ++rows_;
}

AssayWeights assay_weights(const LabelMatrix &labels) {
  AssayWeights w;
  const double n = static_cast<double>(labels.rows());
  for (std::size_t a = 0; a < labels.assays(); ++a) {
    double pos = 0, neg = 0;
    for (std::size_t r = 0; r < labels.rows(); ++r) {
      if (labels(r, a) == 1)
        ++pos;
      else if (labels(r, a) == 0)
        ++neg;
    }
    if (pos == 0)
      throw GnnError(GnnErrc::kNoPositives,
                     "assay " + std::to_string(a) + " has no positive samples");
    w.alpha.push_back(n / (pos + neg));
    w.beta.push_back((pos + neg) / pos);
  }
  return w;
}

NodeId multitask_loss(diff::Graph &g, NodeId probs, const LabelMatrix &labels,
                      const AssayWeights &weights) {
  const std::size_t b = g.rows(probs), a = g.cols(probs);
  check_shapes(b, a, labels, weights);
  Tensor cpos(b, a), cneg(b, a);
  for (std::size_t r = 0; r < b; ++r) {
    for (std::size_t k = 0; k < a; ++k) {
      if (labels(r, k) == 1)
        cpos(r, k) = weights.alpha[k] * weights.beta[k];
      else if (labels(r, k) == 0)
        cneg(r, k) = weights.alpha[k];
    }
  }
  const NodeId log_p = g.log(g.clamp_min(probs, kLogFloor));
  const NodeId one_minus = g.affine(probs, -1.0, 1.0);
  const NodeId log_q = g.log(g.clamp_min(one_minus, kLogFloor));
  const NodeId total = g.sum_all(g.add(g.mul(log_p, g.constant(std::move(cpos))),
                                       g.mul(log_q, g.constant(std::move(cneg)))));
  return g.scale(total, -1.0 / static_cast<double>(b));
}

double multitask_loss_value(const Tensor &probs, const LabelMatrix &labels,
                            const AssayWeights &weights, bool mean) {
  double total = 0;
  for (double s: assay_loss_sums(probs, labels, weights))
    total += s;
  return mean ? total / static_cast<double>(probs.rows()) : total;
}

std::vector<double> assay_loss_sums(const Tensor &probs, const LabelMatrix &labels,
                                    const AssayWeights &weights) {
  check_shapes(probs.rows(), probs.cols(), labels, weights);
  std::vector<double> sums(probs.cols(), 0.0);
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    for (std::size_t k = 0; k < probs.cols(); ++k) {
      const double p = probs(r, k);
      if (labels(r, k) == 1)
        sums[k] -= weights.alpha[k] * weights.beta[k] * std::log(std::max(p, kLogFloor));
      else if (labels(r, k) == 0)
        sums[k] -= weights.alpha[k] * std::log(std::max(1.0 - p, kLogFloor));
    }
  }
  return sums;
}

}  // namespace molsearch::gnn
