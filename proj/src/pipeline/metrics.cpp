//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molsearch/pipeline/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace molsearch::pipeline {

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size())
    throw MetricError(MetricErrc::kSizeMismatch, "scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Twice the rank sum keeps midranks integral.
  double twice_rank_sum = 0;
  double positives = 0, negatives = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]])
      ++j;
    const double twice_midrank = static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] != 0) {
        twice_rank_sum += twice_midrank;
        ++positives;
      } else {
        ++negatives;
      }
    }
    i = j;
  }
  if (positives == 0 || negatives == 0)
    throw MetricError(MetricErrc::kSingleClass,
                      "ROC AUC needs both positive and negative labels");
  const double u2 = twice_rank_sum - positives * (positives + 1);
  return u2 / (2 * positives * negatives);
}

}  // namespace molsearch::pipeline
