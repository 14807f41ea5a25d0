//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molsearch/pipeline/dataset.h"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "molsearch/chem/canonical.h"
#include "molsearch/chem/features.h"
#include "molsearch/chem/smiles.h"

namespace molsearch::pipeline {
namespace {
std::vector<std::string> split_csv_line(const std::string &line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ','))
    cells.push_back(cell);
  if (!line.empty() && line.back() == ',')
    cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return std::isspace(c) == 0; };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}
}  // namespace

std::vector<const chem::MolecularGraph *>
AssayDataset::graph_pointers(const std::vector<std::size_t> &rows) const {
  std::vector<const chem::MolecularGraph *> out;
  out.reserve(rows.size());
  for (std::size_t r: rows)
    out.push_back(&graphs.at(r));
  return out;
}

std::vector<const chem::MolecularGraph *> AssayDataset::graph_pointers() const {
  std::vector<const chem::MolecularGraph *> out;
  out.reserve(graphs.size());
  for (const auto &g: graphs)
    out.push_back(&g);
  return out;
}

bool add_molecule(AssayDataset &data, const std::string &smiles,
                  const std::vector<std::int8_t> &labels) {
  chem::Molecule mol = chem::parse_smiles(smiles);
  chem::MolecularGraph graph = chem::featurize(mol);
  std::string key = chem::canonical_key(mol);
  const auto it = std::find(data.keys.begin(), data.keys.end(), key);
  if (it != data.keys.end()) {
    const auto row = static_cast<std::size_t>(it - data.keys.begin());
    for (std::size_t a = 0; a < labels.size(); ++a) {
      if (data.labels(row, a) != labels[a])
        throw PipelineError(PipelineErrc::kDuplicateConflict,
                            "conflicting labels for " + smiles + " and " + data.smiles[row]);
    }
    return false;
  }
  data.smiles.push_back(smiles);
  data.keys.push_back(std::move(key));
  data.molecules.push_back(std::move(mol));
  data.graphs.push_back(std::move(graph));
  data.labels.append_row(labels);
  return true;
}

AssayDataset ingest_csv(std::istream &in) {
  std::string line;
  if (!std::getline(in, line))
    throw PipelineError(PipelineErrc::kNoAssayColumns, "empty CSV");
  const std::vector<std::string> header = split_csv_line(trim(line));
  AssayDataset data;
  if (header.empty() || trim(header[0]) != "smiles")
    throw PipelineError(PipelineErrc::kParseFailure, "first column must be 'smiles'");
  for (std::size_t c = 1; c < header.size(); ++c) {
    const std::string h = trim(header[c]);
    if (h.rfind("assay_", 0) != 0 || h.size() == 6)
      throw PipelineError(PipelineErrc::kParseFailure, "bad assay column '" + h + "'");
    data.assay_ids.push_back(h.substr(6));
  }
  if (data.assay_ids.empty())
    throw PipelineError(PipelineErrc::kNoAssayColumns, "no assay columns");
  data.labels = gnn::LabelMatrix(0, data.assay_ids.size());

  // Duplicate lookups go through a map; add_molecule's scan is for small use.
  std::unordered_map<std::string, std::size_t> seen;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    line = trim(line);
    if (line.empty())
      continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw PipelineError(PipelineErrc::kParseFailure,
                          "row " + std::to_string(row) + ": expected "
                              + std::to_string(header.size()) + " cells");
    std::vector<std::int8_t> labels;
    for (std::size_t c = 1; c < cells.size(); ++c) {
      const std::string v = trim(cells[c]);
      if (v.empty())
        labels.push_back(gnn::kMissingLabel);
      else if (v == "0" || v == "1")
        labels.push_back(static_cast<std::int8_t>(v[0] - '0'));
      else
        throw PipelineError(PipelineErrc::kParseFailure,
                            "row " + std::to_string(row) + ": bad label '" + v + "'");
    }
    const std::string smiles = trim(cells[0]);
    chem::Molecule mol;
    try {
      mol = chem::parse_smiles(smiles);
    } catch (const Error &e) {
      throw PipelineError(PipelineErrc::kParseFailure,
                          "row " + std::to_string(row) + ": " + e.what());
    }
    std::string key;
    chem::MolecularGraph graph;
    try {
      key = chem::canonical_key(mol);
      graph = chem::featurize(mol);
    } catch (const Error &e) {
      throw PipelineError(PipelineErrc::kParseFailure,
                          "row " + std::to_string(row) + ": " + e.what());
    }
    if (auto it = seen.find(key); it != seen.end()) {
      for (std::size_t a = 0; a < labels.size(); ++a) {
        if (data.labels(it->second, a) != labels[a])
          throw PipelineError(PipelineErrc::kDuplicateConflict,
                              "row " + std::to_string(row) + ": labels of " + smiles
                                  + " conflict with " + data.smiles[it->second]);
      }
      continue;
    }
    seen.emplace(key, data.size());
    data.smiles.push_back(smiles);
    data.keys.push_back(std::move(key));
    data.molecules.push_back(std::move(mol));
    data.graphs.push_back(std::move(graph));
    data.labels.append_row(labels);
  }
  return data;
}

AssayDataset ingest_csv_file(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw PipelineError(PipelineErrc::kIo, "cannot open " + path);
  return ingest_csv(in);
}

void write_dataset_csv(std::ostream &out, const AssayDataset &data) {
  out << "smiles";
  for (const std::string &id: data.assay_ids)
    out << ",assay_" << id;
  out << '\n';
  for (std::size_t r = 0; r < data.size(); ++r) {
    out << data.smiles[r];
    for (std::size_t a = 0; a < data.assay_ids.size(); ++a) {
      out << ',';
      if (data.labels(r, a) != gnn::kMissingLabel)
        out << static_cast<int>(data.labels(r, a));
    }
    out << '\n';
  }
}

}  // namespace molsearch::pipeline
