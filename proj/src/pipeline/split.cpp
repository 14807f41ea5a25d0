//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molsearch/pipeline/split.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "molsearch/gnn/train.h"
#include "molsearch/pipeline/dataset.h"
#include "molsearch/rng.h"

namespace molsearch::pipeline {

SplitPlan split(const gnn::LabelMatrix &labels, double test_fraction, std::size_t k,
                std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw PipelineError(PipelineErrc::kConfig, "test fraction must lie in (0, 1)");

  std::map<std::vector<std::int8_t>, std::vector<std::size_t>> groups;
  for (std::size_t r = 0; r < labels.rows(); ++r) {
    std::vector<std::int8_t> key(labels.assays());
    for (std::size_t a = 0; a < labels.assays(); ++a)
      key[a] = labels(r, a);
    groups[key].push_back(r);
  }

  // Cumulative quotas: the group boundaries are rounded, not the group
  // sizes, so the test set has round(n * fraction) rows in total.
  SplitPlan plan;
  plan.seed = seed;
  Rng rng(seed, "split", 1);
  std::size_t seen = 0, taken = 0;
  for (auto &[key, rows]: groups) {
    std::shuffle(rows.begin(), rows.end(), rng.engine());
    seen += rows.size();
    const auto quota = static_cast<std::size_t>(
        std::llround(static_cast<double>(seen) * test_fraction));
    const std::size_t take = quota - taken;
    plan.test.insert(plan.test.end(), rows.begin(), rows.begin() + take);
    plan.train.insert(plan.train.end(), rows.begin() + take, rows.end());
    taken = quota;
  }
  std::sort(plan.test.begin(), plan.test.end());
  std::sort(plan.train.begin(), plan.train.end());

  for (std::size_t a = 0; a < labels.assays(); ++a) {
    const bool has = std::any_of(plan.test.begin(), plan.test.end(),
                                 [&](std::size_t r) { return labels(r, a) == 1; });
    if (!has) {
      throw PipelineError(PipelineErrc::kInsufficientPositives,
                          "test set has no positive for assay " + std::to_string(a));
    }
  }

  if (k > 0) {
    try {
      auto local = gnn::stratified_folds(labels.subset(plan.train), k, seed);
      for (auto &fold: local) {
        for (std::size_t &r: fold)
          r = plan.train[r];
      }
      plan.folds = std::move(local);
    } catch (const gnn::GnnError &e) {
      throw PipelineError(PipelineErrc::kInsufficientPositives, e.what());
    }
  }
  return plan;
}

}  // namespace molsearch::pipeline
