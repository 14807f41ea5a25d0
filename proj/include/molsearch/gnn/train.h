//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "molsearch/gnn/loss.h"
#include "molsearch/gnn/model.h"

namespace molsearch::gnn {

struct TrainConfig {
  std::size_t max_epochs = 200;
  std::size_t batch_size = 128;
  double lr = 2e-5;
  double weight_decay = 1e-4;
  std::size_t patience = 20;
  std::size_t predict_chunk = 256;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0;  // mean over the epoch's training batches
  double val_loss = 0;
  // NaN where the validation set lacks one of the classes.
  std::vector<double> val_auc;

  bool operator==(const EpochLog &) const = default;
};

struct TrainResult {
  GnnModel model;  // parameters of the best validation epoch
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;  // 0 if no epoch beat the initial model
  double initial_val_loss = 0;
};

using EpochCallback = std::function<void(std::size_t member, const EpochLog &)>;

// Adam on the multitask loss with early stopping on validation loss. Assay
// weights come from the training labels. All randomness derives from
// (seed, member).
TrainResult train_model(const GnnConfig &model_config, const TrainConfig &config,
                        const std::vector<const chem::MolecularGraph *> &train_graphs,
                        const LabelMatrix &train_labels,
                        const std::vector<const chem::MolecularGraph *> &val_graphs,
                        const LabelMatrix &val_labels, std::uint64_t seed,
                        std::size_t member = 0, const EpochCallback &on_epoch = {});

// Partitions row indices into `folds` folds stratified on the joint label
// pattern (including missing entries). Throws InsufficientPositives if some
// fold would get no positive of some assay.
std::vector<std::vector<std::size_t>> stratified_folds(const LabelMatrix &labels,
                                                       std::size_t folds,
                                                       std::uint64_t seed);

// Fold count used for k members: k itself, or 5 for a single model (which
// then validates on fold 0).
constexpr std::size_t ensemble_fold_count(std::size_t k) { return k == 1 ? 5 : k; }

struct Ensemble {
  std::vector<GnnModel> members;
  std::vector<std::size_t> val_fold;
  std::vector<AssayWeights> weights;
  std::vector<std::vector<EpochLog>> logs;

  std::size_t latent_width() const;
};

Ensemble train_ensemble(const GnnConfig &model_config, const TrainConfig &config,
                        const std::vector<const chem::MolecularGraph *> &graphs,
                        const LabelMatrix &labels, std::size_t k, std::uint64_t seed,
                        const EpochCallback &on_epoch = {});

// Member-mean probabilities and member latents concatenated in member order.
Prediction ensemble_predict(Ensemble &ensemble,
                            const std::vector<const chem::MolecularGraph *> &graphs,
                            std::size_t chunk = 256);

}  // namespace molsearch::gnn
