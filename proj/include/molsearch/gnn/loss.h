//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "molsearch/diff/graph.h"
#include "molsearch/gnn/model.h"

namespace molsearch::gnn {

inline constexpr std::int8_t kMissingLabel = -1;

// Molecules x assays, entries 0, 1 or kMissingLabel.
class LabelMatrix {
public:
  LabelMatrix() = default;
  LabelMatrix(std::size_t rows, std::size_t assays,
              std::int8_t fill = kMissingLabel)
      : rows_(rows), assays_(assays), data_(rows * assays, fill) { }

  std::size_t rows() const { return rows_; }
  std::size_t assays() const { return assays_; }

  std::int8_t operator()(std::size_t r, std::size_t a) const {
    return data_[r * assays_ + a];
  }
  std::int8_t &operator()(std::size_t r, std::size_t a) {
    return data_[r * assays_ + a];
  }

  LabelMatrix subset(std::span<const std::size_t> rows) const;
  void append_row(std::span<const std::int8_t> row);

private:
  std::size_t rows_ = 0, assays_ = 0;
  std::vector<std::int8_t> data_;
};

struct AssayWeights {
  std::vector<double> alpha;
  std::vector<double> beta;
};

// alpha_A = N / (I + J), beta_A = (I + J) / I for I positives and J negatives
// of assay A among N training molecules.
AssayWeights assay_weights(const LabelMatrix &labels);

// Graph form: -(1/B) sum over rows and assays of the weighted, clamped
// log-likelihood. Missing labels contribute nothing.
NodeId multitask_loss(diff::Graph &g, NodeId probs, const LabelMatrix &labels,
                      const AssayWeights &weights);

// Same loss on plain values; `mean = false` skips the 1/B factor.
double multitask_loss_value(const Tensor &probs, const LabelMatrix &labels,
                            const AssayWeights &weights, bool mean = true);

// Summed (unnormalized) loss of each assay.
std::vector<double> assay_loss_sums(const Tensor &probs, const LabelMatrix &labels,
                                    const AssayWeights &weights);

}  // namespace molsearch::gnn
