//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

// End-to-end run: data -> split -> predictor ensemble -> energy model ->
// energy bounds -> search, writing every artifact into one directory:
//
//   config.cfg          resolved configuration
//   dataset.csv         molecules and labels
//   split.csv           row,set,fold
//   metrics.csv         per-member, per-epoch predictor training log
//   deen_metrics.csv    per-epoch energy-model training log
//   auc_table.csv       test AUC per member, member mean, ensemble
//   checkpoints/        gnn/ensemble.ckpt, gnn/member_<i>.ckpt, energy.ckpt
//   results.csv         ranked discoveries with the configured beta
//   results_beta_zero.csv  the same search with beta = 0 (optional)
//   energy_hist.csv     energies of test positives and top discoveries
//   summary.json        headline numbers
//
// A failing stage throws PipelineError(kStage) naming the stage; files
// written by earlier stages are kept.

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "molsearch/deen/energy.h"
#include "molsearch/grammar/grammar.h"
#include "molsearch/pipeline/config.h"
#include "molsearch/pipeline/dataset.h"

namespace molsearch::pipeline {

struct AucRow {
  std::string model;  // member_<i>, member_mean or ensemble
  std::vector<double> auc;  // per assay; NaN if the test set has one class
};

struct PipelineSummary {
  std::vector<std::string> assay_ids;
  std::size_t molecules = 0;
  std::size_t test_size = 0;
  std::vector<AucRow> auc_table;
  deen::EnergyBounds bounds;
  double beta = 0;
  std::size_t discovered = 0;
  std::size_t discovered_beta_zero = 0;
  double test_positive_median = 0;
  double median_beta = 0;       // top hist_top discoveries with beta
  double median_beta_zero = 0;  // NaN when the comparison is off
  double mad_beta = 0;          // about the test-positive median
  double mad_beta_zero = 0;
};

using LogFn = std::function<void(const std::string &)>;

enum class Stage {
  kData,
  kSplit,
  kGnn,
  kEvaluate,
  kLatent,
  kDeen,
  kBounds,
  kSearch,
  kReport,
};

const char *stage_name(Stage s) noexcept;

// Partial runs for the command-line tools. Data and split are cheap and
// deterministic, so they are always recomputed; models that are not trained
// are loaded from the checkpoints in the output directory.
struct RunOptions {
  Stage last = Stage::kReport;
  bool train_gnn = true;
  bool train_deen = true;
};

PipelineSummary run_pipeline(const PipelineConfig &config, const std::string &out_dir,
                             const LogFn &log = {}, const RunOptions &options = {});

// The configured dataset: synthetic or read from CSV.
AssayDataset load_dataset(const PipelineConfig &config, const grammar::Grammar &g);

}  // namespace molsearch::pipeline
