//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "molsearch/chem/molecule.h"
#include "molsearch/error.h"
#include "molsearch/gnn/loss.h"

namespace molsearch::pipeline {

enum class PipelineErrc {
  kParseFailure,
  kDuplicateConflict,
  kNoAssayColumns,
  kInsufficientPositives,
  kGrammarTooSmall,
  kBadRule,
  kConfig,
  kIo,
  kStage,
};

using PipelineError = CodedError<PipelineErrc>;

struct AssayDataset {
  std::vector<std::string> assay_ids;
  std::vector<std::string> smiles;
  std::vector<std::string> keys;  // canonical keys, unique
  std::vector<chem::Molecule> molecules;
  std::vector<chem::MolecularGraph> graphs;
  gnn::LabelMatrix labels;

  std::size_t size() const { return smiles.size(); }
  std::vector<const chem::MolecularGraph *> graph_pointers(
      const std::vector<std::size_t> &rows) const;
  std::vector<const chem::MolecularGraph *> graph_pointers() const;
};

// CSV with header `smiles,assay_<id>,...` and cells 0, 1 or empty. Rows
// naming the same molecule are merged; conflicting labels are an error.
AssayDataset ingest_csv(std::istream &in);
AssayDataset ingest_csv_file(const std::string &path);

void write_dataset_csv(std::ostream &out, const AssayDataset &data);

// Adds one molecule; returns false if its key is already present with the
// same labels (throws on a conflict).
bool add_molecule(AssayDataset &data, const std::string &smiles,
                  const std::vector<std::int8_t> &labels);

}  // namespace molsearch::pipeline
