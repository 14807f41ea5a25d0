//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molsearch/search/reward.h"

#include "molsearch/chem/canonical.h"
#include "molsearch/chem/features.h"
#include "molsearch/chem/smiles.h"

namespace molsearch::search {

ModelEvaluator::ModelEvaluator(RewardSpec spec): spec_(spec) {
  if (spec_.ensemble == nullptr || spec_.energy_net == nullptr)
    throw Error("reward needs an ensemble and an energy net");
  if (spec_.ensemble->members.empty()
      || spec_.assay >= spec_.ensemble->members[0].config.assays)
    throw Error("target assay out of range");
  if (!(spec_.beta >= 0))
    throw Error("beta must be non-negative");
}

Evaluation ModelEvaluator::operator()(const std::string &smiles) {
  chem::Molecule mol;
  chem::MolecularGraph graph;
  std::string key;
  try {
    mol = chem::parse_smiles(smiles);
    graph = chem::featurize(mol);
    key = chem::canonical_key(mol);
  } catch (const Error &) {
    return Evaluation {};
  }
  if (auto it = cache_.find(key); it != cache_.end()) {
    ++hits_;
    Evaluation e = it->second;
    e.reward = reward_value(e.f, e.delta_energy, spec_.beta);
    return e;
  }

  const gnn::Prediction pred = gnn::ensemble_predict(*spec_.ensemble, { &graph }, 1);
  Evaluation e;
  e.valid = true;
  e.key = key;
  e.f_all = pred.probs.values();
  e.f = e.f_all[spec_.assay];
  e.energy = deen::energy(*spec_.energy_net, pred.latent);
  e.delta_energy = e.energy - spec_.bounds.phi_min;
  e.reward = reward_value(e.f, e.delta_energy, spec_.beta);
  cache_.emplace(key, e);
  return e;
}

}  // namespace molsearch::search
