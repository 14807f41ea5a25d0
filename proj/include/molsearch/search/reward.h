//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <string>
#include <unordered_map>

#include "molsearch/deen/energy.h"
#include "molsearch/gnn/train.h"
#include "molsearch/search/mcts.h"

namespace molsearch::search {

struct RewardSpec {
  std::size_t assay = 0;
  double beta = 0;
  deen::EnergyBounds bounds;
  gnn::Ensemble *ensemble = nullptr;
  const deen::EnergyNet *energy_net = nullptr;
};

// Scores SMILES strings with the predictor ensemble and the energy model.
// Strings that do not parse score 0. Results are memoized by canonical key,
// which is sound because the forward pass is permutation invariant.
class ModelEvaluator {
public:
  explicit ModelEvaluator(RewardSpec spec);

  Evaluation operator()(const std::string &smiles);

  // Changes the energy weight. Cached predictions stay valid; only the
  // reward is recomputed.
  void set_beta(double beta) { spec_.beta = beta; }

  std::size_t cache_hits() const { return hits_; }
  std::size_t cache_size() const { return cache_.size(); }

private:
  RewardSpec spec_;
  std::unordered_map<std::string, Evaluation> cache_;
  std::size_t hits_ = 0;
};

}  // namespace molsearch::search
