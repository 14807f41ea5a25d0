//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

// Logistic regression on hand-picked features. Used as a sanity check that a
// synthetic assay is learnable: with a rule's own comparisons as features it
// should rank molecules almost perfectly.

#pragma once

#include <span>
#include <vector>

#include "molsearch/chem/molecule.h"
#include "molsearch/pipeline/rules.h"

namespace molsearch::pipeline {

struct LogisticModel {
  std::vector<double> weights;
  double bias = 0;

  double operator()(std::span<const double> x) const;  // probability
};

// L2-regularized maximum likelihood by Newton iterations. Rows of `x` must
// share one width.
LogisticModel fit_logistic(const std::vector<std::vector<double>> &x,
                           const std::vector<int> &y, double l2 = 1e-3,
                           std::size_t iterations = 50);

std::vector<double> rule_features(const Rule &rule, const chem::Molecule &mol);

}  // namespace molsearch::pipeline
