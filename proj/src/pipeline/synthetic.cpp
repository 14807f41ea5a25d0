//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molsearch/pipeline/synthetic.h"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "molsearch/chem/canonical.h"
#include "molsearch/chem/features.h"
#include "molsearch/chem/smiles.h"
#include "molsearch/pipeline/rules.h"
#include "molsearch/rng.h"

namespace molsearch::pipeline {

AssayDataset make_synthetic_assays(const grammar::Grammar &g,
                                   const SyntheticConfig &config, std::uint64_t seed) {
  if (config.assays.empty())
    throw PipelineError(PipelineErrc::kNoAssayColumns, "no synthetic assays configured");
  std::vector<Rule> rules;
  for (const SyntheticAssay &a: config.assays) {
    if (!(a.label_noise >= 0.0 && a.label_noise <= 1.0))
      throw PipelineError(PipelineErrc::kConfig, "label noise of assay " + a.id
                                                     + " must lie in [0, 1]");
    rules.push_back(parse_rule(a.rule));
  }

  AssayDataset data;
  for (const SyntheticAssay &a: config.assays)
    data.assay_ids.push_back(a.id);
  data.labels = gnn::LabelMatrix(0, config.assays.size());

  Rng rng(seed, "synth");
  std::unordered_set<std::string> seen;
  const grammar::DerivationState start = grammar::initial_state(g);
  const std::size_t budget = config.budget_factor * config.n_molecules;
  std::size_t attempts = 0;
  std::vector<std::int8_t> row(config.assays.size());
  while (data.size() < config.n_molecules) {
    if (attempts++ >= budget) {
      throw PipelineError(PipelineErrc::kGrammarTooSmall,
                          "only " + std::to_string(data.size()) + " unique molecules in "
                              + std::to_string(budget) + " rollouts");
    }
    std::string smiles;
    chem::Molecule mol;
    try {
      smiles = grammar::rollout_complete(start, g, rng, config.terminal_force_depth);
      mol = chem::parse_smiles(smiles);
    } catch (const Error &) {
      continue;  // runaway derivation or a string outside the SMILES subset
    }
    if (mol.atoms.empty() || (config.max_atoms > 0 && mol.atoms.size() > config.max_atoms))
      continue;
    std::string key = chem::canonical_key(mol);
    if (!seen.insert(key).second)
      continue;
    for (std::size_t a = 0; a < rules.size(); ++a)
      row[a] = rules[a](mol) ? 1 : 0;
    data.graphs.push_back(chem::featurize(mol));
    data.smiles.push_back(std::move(smiles));
    data.keys.push_back(std::move(key));
    data.molecules.push_back(std::move(mol));
    data.labels.append_row(row);
  }

  for (std::size_t a = 0; a < config.assays.size(); ++a) {
    Rng noise(seed, "label_noise", a);
    for (std::size_t r = 0; r < data.size(); ++r) {
      // One draw per row keeps the flips independent of the labels.
      if (noise.bernoulli(config.assays[a].label_noise))
        data.labels(r, a) = static_cast<std::int8_t>(1 - data.labels(r, a));
    }
    if (config.assays[a].keep) {
      Rng mask(seed, "mask", a);
      mask_to_counts(data.labels, a, *config.assays[a].keep, mask);
    }
  }
  return data;
}

void mask_to_counts(gnn::LabelMatrix &labels, std::size_t assay, LabelCounts keep,
                    Rng &rng) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t r = 0; r < labels.rows(); ++r) {
    if (labels(r, assay) == 1)
      pos.push_back(r);
    else if (labels(r, assay) == 0)
      neg.push_back(r);
  }
  if (pos.size() < keep.positives || neg.size() < keep.negatives) {
    throw PipelineError(PipelineErrc::kConfig,
                        "assay " + std::to_string(assay) + " has "
                            + std::to_string(pos.size()) + " positives and "
                            + std::to_string(neg.size()) + " negatives, cannot keep "
                            + std::to_string(keep.positives) + "/"
                            + std::to_string(keep.negatives));
  }
  auto drop = [&](std::vector<std::size_t> &rows, std::size_t n) {
    std::shuffle(rows.begin(), rows.end(), rng.engine());
    for (std::size_t i = n; i < rows.size(); ++i)
      labels(rows[i], assay) = gnn::kMissingLabel;
  };
  drop(pos, keep.positives);
  drop(neg, keep.negatives);
}

LabelCounts scaled_counts(const ScreenProfile &profile, std::size_t molecules) {
  const double f = static_cast<double>(molecules) / static_cast<double>(kScreenMolecules);
  return LabelCounts {
    static_cast<std::size_t>(std::llround(static_cast<double>(profile.active) * f)),
    static_cast<std::size_t>(std::llround(static_cast<double>(profile.inactive) * f)),
  };
}

}  // namespace molsearch::pipeline
