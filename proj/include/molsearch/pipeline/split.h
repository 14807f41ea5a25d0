//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <vector>

#include "molsearch/gnn/loss.h"

namespace molsearch::pipeline {

struct SplitPlan {
  std::vector<std::size_t> test;
  std::vector<std::size_t> train;  // everything not in test, ascending
  // Fold lists hold dataset row indices; together they cover `train`.
  std::vector<std::vector<std::size_t>> folds;
  std::uint64_t seed = 0;
};

// Held-out test set stratified on the joint label pattern, then k folds over
// the remainder (k = 0 skips the folds). The folds are exactly the ones
// gnn::train_ensemble derives from the remainder with the same seed.
SplitPlan split(const gnn::LabelMatrix &labels, double test_fraction, std::size_t k,
                std::uint64_t seed);

}  // namespace molsearch::pipeline
