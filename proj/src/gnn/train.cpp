//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molsearch/gnn/train.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "molsearch/chem/canonical.h"
#include "molsearch/diff/nn.h"
#include "molsearch/pipeline/metrics.h"

namespace molsearch::gnn {
namespace {
std::vector<chem::MolecularGraph>
canonical_copies(const std::vector<const chem::MolecularGraph *> &graphs) {
  std::vector<chem::MolecularGraph> out;
  out.reserve(graphs.size());
  for (const chem::MolecularGraph *g: graphs)
    out.push_back(chem::canonicalize(*g));
  return out;
}

Tensor predict_canonical(GnnModel &model, const std::vector<chem::MolecularGraph> &graphs,
                         std::size_t chunk) {
  Tensor probs(graphs.size(), model.config.assays);
  for (std::size_t begin = 0; begin < graphs.size(); begin += chunk) {
    const std::size_t end = std::min(graphs.size(), begin + chunk);
    std::vector<const chem::MolecularGraph *> part;
    for (std::size_t i = begin; i < end; ++i)
      part.push_back(&graphs[i]);
    diff::Graph g;
    diff::ParamBinder binder(g);
    Context ctx { binder };
    const ForwardNodes f = build_forward(ctx, model, make_batch(part, false));
    const Tensor &p = g.value(f.probs);
    std::copy_n(p.data(), p.size(), probs.row_ptr(begin));
  }
  return probs;
}

std::vector<double> per_assay_auc(const Tensor &probs, const LabelMatrix &labels) {
  std::vector<double> out;
  for (std::size_t a = 0; a < labels.assays(); ++a) {
    std::vector<double> scores;
    std::vector<int> y;
    for (std::size_t r = 0; r < labels.rows(); ++r) {
      if (labels(r, a) == kMissingLabel)
        continue;
      scores.push_back(probs(r, a));
      y.push_back(labels(r, a));
    }
    try {
      out.push_back(pipeline::roc_auc(scores, y));
    } catch (const pipeline::MetricError &) {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  return out;
}

// Mini-batches of a shuffled order; a trailing batch of one is folded into
// its predecessor so that batch norm always sees at least two rows.
std::vector<std::vector<std::size_t>> make_batches(std::vector<std::size_t> order,
                                                   std::size_t batch_size) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    const std::size_t end = std::min(order.size(), i + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  if (out.size() >= 2 && out.back().size() == 1) {
    out[out.size() - 2].push_back(out.back()[0]);
    out.pop_back();
  }
  return out;
}
}  // namespace

TrainResult train_model(const GnnConfig &model_config, const TrainConfig &config,
                        const std::vector<const chem::MolecularGraph *> &train_graphs,
                        const LabelMatrix &train_labels,
                        const std::vector<const chem::MolecularGraph *> &val_graphs,
                        const LabelMatrix &val_labels, std::uint64_t seed,
                        std::size_t member, const EpochCallback &on_epoch) {
  if (train_graphs.empty())
    throw GnnError(GnnErrc::kEmptyTrainingSet, "no training molecules");
  if (train_labels.rows() != train_graphs.size()
      || val_labels.rows() != val_graphs.size()
      || train_labels.assays() != model_config.assays
      || val_labels.assays() != model_config.assays)
    throw GnnError(GnnErrc::kShapeMismatch, "labels do not match molecules");

  const AssayWeights weights = assay_weights(train_labels);
  const std::vector<chem::MolecularGraph> train_set = canonical_copies(train_graphs);
  const std::vector<chem::MolecularGraph> val_set = canonical_copies(val_graphs);
  const std::size_t chunk = std::max<std::size_t>(config.predict_chunk, 1);

  Rng init_rng(seed, "init", member);
  Rng dropout_rng(seed, "dropout", member);
  TrainResult result;
  result.model = GnnModel::init(model_config, init_rng);
  GnnModel model = result.model;

  diff::NamedTensors named = model.parameters();
  std::vector<Tensor *> params;
  for (auto &[name, t]: named)
    params.push_back(t);
  diff::Adam adam(params, diff::AdamConfig { .lr = config.lr,
                                             .weight_decay = config.weight_decay });

  auto val_loss = [&](GnnModel &m, std::vector<double> *auc) {
    if (val_set.empty())
      return 0.0;
    const Tensor probs = predict_canonical(m, val_set, chunk);
    if (auc != nullptr)
      *auc = per_assay_auc(probs, val_labels);
    return multitask_loss_value(probs, val_labels, weights);
  };
  result.initial_val_loss = val_loss(model, nullptr);
  double best = result.initial_val_loss;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch_size = std::max<std::size_t>(config.batch_size, 1);

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    Rng shuffle_rng(seed, "shuffle", member * 100000 + epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());

    double loss_sum = 0;
    for (const std::vector<std::size_t> &rows: make_batches(order, batch_size)) {
      std::vector<const chem::MolecularGraph *> part;
      for (std::size_t r: rows)
        part.push_back(&train_set[r]);
      diff::Graph g;
      diff::ParamBinder binder(g);
      diff::BatchNormRecorder recorder;
      Context ctx { binder, true, &dropout_rng, &recorder };
      const ForwardNodes f = build_forward(ctx, model, make_batch(part, false));
      const NodeId loss =
          multitask_loss(g, f.probs, train_labels.subset(rows), weights);
      loss_sum += g.value(loss).item() * static_cast<double>(rows.size());

      std::vector<NodeId> wrt;
      std::vector<std::size_t> bound_at;
      for (std::size_t i = 0; i < params.size(); ++i) {
        if (binder.bound(*params[i])) {
          bound_at.push_back(i);
          wrt.push_back(binder.leaf(*params[i]));
        }
      }
      const std::vector<NodeId> grad_ids = diff::gradient(g, loss, wrt);
      std::vector<Tensor> zeros;
      zeros.reserve(params.size());
      std::vector<const Tensor *> grads(params.size(), nullptr);
      for (std::size_t j = 0; j < bound_at.size(); ++j)
        grads[bound_at[j]] = &g.value(grad_ids[j]);
      for (std::size_t i = 0; i < params.size(); ++i) {
        if (grads[i] == nullptr) {
          zeros.emplace_back(params[i]->rows(), params[i]->cols());
          grads[i] = &zeros.back();
        }
      }
      recorder.apply(g);
      adam.step(grads);
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(train_set.size());
    entry.val_loss = val_loss(model, &entry.val_auc);
    result.log.push_back(entry);
    if (on_epoch)
      on_epoch(member, entry);

    if (entry.val_loss < best) {
      best = entry.val_loss;
      result.best_epoch = epoch;
      result.model = model;
    }
    if (epoch - result.best_epoch >= config.patience)
      break;
  }
  return result;
}

std::vector<std::vector<std::size_t>> stratified_folds(const LabelMatrix &labels,
                                                       std::size_t folds,
                                                       std::uint64_t seed) {
  if (folds == 0 || labels.rows() < folds)
    throw GnnError(GnnErrc::kInsufficientPositives,
                   "need at least as many molecules as folds");
  std::map<std::vector<std::int8_t>, std::vector<std::size_t>> groups;
  for (std::size_t r = 0; r < labels.rows(); ++r) {
    std::vector<std::int8_t> key(labels.assays());
    for (std::size_t a = 0; a < labels.assays(); ++a)
      key[a] = labels(r, a);
    groups[key].push_back(r);
  }

  std::vector<std::vector<std::size_t>> out(folds);
  Rng rng(seed, "split");
  std::size_t next = 0;
  for (auto &[key, rows]: groups) {
    std::shuffle(rows.begin(), rows.end(), rng.engine());
    for (std::size_t r: rows) {
      out[next].push_back(r);
      next = (next + 1) % folds;
    }
  }
  for (auto &fold: out)
    std::sort(fold.begin(), fold.end());

  for (std::size_t a = 0; a < labels.assays(); ++a) {
    for (std::size_t f = 0; f < folds; ++f) {
      const bool has = std::any_of(out[f].begin(), out[f].end(),
                                   [&](std::size_t r) { return labels(r, a) == 1; });
      if (!has)
        throw GnnError(GnnErrc::kInsufficientPositives,
                       "fold " + std::to_string(f) + " has no positive for assay "
                           + std::to_string(a));
    }
  }
  return out;
}

std::size_t Ensemble::latent_width() const {
  std::size_t w = 0;
  for (const GnnModel &m: members)
    w += m.config.latent_width();
  return w;
}

Ensemble train_ensemble(const GnnConfig &model_config, const TrainConfig &config,
                        const std::vector<const chem::MolecularGraph *> &graphs,
                        const LabelMatrix &labels, std::size_t k, std::uint64_t seed,
                        const EpochCallback &on_epoch) {
  if (k == 0)
    throw GnnError(GnnErrc::kEmptyTrainingSet, "ensemble needs at least one member");
  if (graphs.size() != labels.rows())
    throw GnnError(GnnErrc::kShapeMismatch, "labels do not match molecules");
  const auto folds = stratified_folds(labels, ensemble_fold_count(k), seed);

  Ensemble ens;
  for (std::size_t m = 0; m < k; ++m) {
    std::vector<std::size_t> train_rows, val_rows = folds[m];
    for (std::size_t f = 0; f < folds.size(); ++f) {
      if (f != m)
        train_rows.insert(train_rows.end(), folds[f].begin(), folds[f].end());
    }
    std::sort(train_rows.begin(), train_rows.end());
    std::vector<const chem::MolecularGraph *> train_g, val_g;
    for (std::size_t r: train_rows)
      train_g.push_back(graphs[r]);
    for (std::size_t r: val_rows)
      val_g.push_back(graphs[r]);
    const LabelMatrix train_l = labels.subset(train_rows);
    TrainResult res = train_model(model_config, config, train_g, train_l, val_g,
                                  labels.subset(val_rows), seed, m, on_epoch);
    ens.members.push_back(std::move(res.model));
    ens.val_fold.push_back(m);
    ens.weights.push_back(assay_weights(train_l));
    ens.logs.push_back(std::move(res.log));
  }
  return ens;
}

Prediction ensemble_predict(Ensemble &ensemble,
                            const std::vector<const chem::MolecularGraph *> &graphs,
                            std::size_t chunk) {
  if (ensemble.members.empty())
    throw GnnError(GnnErrc::kEmptyTrainingSet, "empty ensemble");
  const std::size_t assays = ensemble.members[0].config.assays;
  Prediction out { Tensor(graphs.size(), assays),
                   Tensor(graphs.size(), ensemble.latent_width()) };
  std::size_t offset = 0;
  for (GnnModel &m: ensemble.members) {
    const Prediction p = predict(m, graphs, chunk);
    if (p.probs.cols() != assays)
      throw GnnError(GnnErrc::kShapeMismatch, "members disagree on assay count");
    for (std::size_t i = 0; i < p.probs.size(); ++i)
      out.probs[i] += p.probs[i];
    const std::size_t w = p.latent.cols();
    for (std::size_t r = 0; r < graphs.size(); ++r)
      std::copy_n(p.latent.row_ptr(r), w, out.latent.row_ptr(r) + offset);
    offset += w;
  }
  const double k = static_cast<double>(ensemble.members.size());
  for (std::size_t i = 0; i < out.probs.size(); ++i)
    out.probs[i] /= k;
  return out;
}

}  // namespace molsearch::gnn
