//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

// Pipeline configuration. The file format is one `key = value` per line,
// `#` comments, and indexed keys for assays:
//
//   seed = 7
//   data.source = synthetic
//   assay.0.rule = N & ring
//   search.beta = beta0
//
// Unknown keys are errors. Relative paths resolve against the directory of
// the config file. Defaults are the full-scale settings; see configs/ for
// desk-scale overrides.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "molsearch/deen/energy.h"
#include "molsearch/gnn/model.h"
#include "molsearch/gnn/train.h"
#include "molsearch/pipeline/synthetic.h"
#include "molsearch/search/mcts.h"

namespace molsearch::pipeline {

struct PipelineConfig {
  std::uint64_t seed = 0;

  std::string data_source = "synthetic";  // or "csv"
  std::string data_csv;
  std::string grammar = "data/smiles.bnf";
  SyntheticConfig synthetic;

  double test_fraction = 0.2;
  std::size_t ensemble_size = 5;
  gnn::GnnConfig gnn;  // assays is set from the data
  gnn::TrainConfig train;

  deen::DeenConfig deen;

  search::SearchConfig search;  // search.seed follows `seed`
  std::size_t search_assay = 0;
  std::optional<double> beta;  // empty = beta0 from the test positives
  bool compare_beta_zero = true;

  std::size_t hist_bins = 30;
  std::size_t hist_top = 500;  // discoveries per energy histogram
};

using KeyValues = std::map<std::string, std::string>;

// Throws PipelineError(kConfig) naming the line.
KeyValues parse_key_values(std::istream &in);

// Applies overrides to `config`; throws kConfig on unknown keys or bad values.
// `base_dir` anchors relative paths.
void apply_key_values(PipelineConfig &config, const KeyValues &kv,
                      const std::string &base_dir = "");

PipelineConfig load_config(const std::string &path);

// Every key with its current value, in the file format. Loading the output
// reproduces the config.
void write_config(std::ostream &out, const PipelineConfig &config);

}  // namespace molsearch::pipeline
