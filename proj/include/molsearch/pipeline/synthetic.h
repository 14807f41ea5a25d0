//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

// Desk-scale stand-in for screening assays: grammar-sampled molecules
// labelled by structural rules.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "molsearch/grammar/grammar.h"
#include "molsearch/pipeline/dataset.h"

namespace molsearch::pipeline {

// Number of labelled actives and inactives an assay should keep.
struct LabelCounts {
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

struct SyntheticAssay {
  std::string id;
  std::string rule;
  double label_noise = 0.0;  // independent flip probability
  // Keep only this many labels (random choice within each class).
  std::optional<LabelCounts> keep;
};

struct SyntheticConfig {
  std::size_t n_molecules = 2000;
  std::vector<SyntheticAssay> assays;
  std::size_t terminal_force_depth = 30;
  std::size_t max_atoms = 0;  // 0 = no limit
  // Give up after budget_factor * n_molecules rollouts.
  std::size_t budget_factor = 50;
};

// Unique molecules from rollouts of Rng(seed, "synth"), labelled by rule,
// then flipped with Rng(seed, "label_noise", a) and masked with
// Rng(seed, "mask", a). Throws GrammarTooSmall when the budget runs out.
AssayDataset make_synthetic_assays(const grammar::Grammar &g,
                                   const SyntheticConfig &config, std::uint64_t seed);

// Masks labels of `assay` so that exactly `keep` positives and negatives
// remain labelled. Throws kConfig if a class has too few labels.
void mask_to_counts(gnn::LabelMatrix &labels, std::size_t assay, LabelCounts keep,
                    Rng &rng);

struct ScreenProfile {
  const char *assay_id;
  std::size_t inactive;
  std::size_t active;
};

// Per-assay sizes of the four protease screens, and the number of distinct
// molecules across them.
inline constexpr std::array<ScreenProfile, 4> kScreenProfiles { {
    { "1706", 290321, 405 },
    { "1879", 244, 136 },
    { "485353", 322433, 602 },
    { "652038", 735, 198 },
} };
inline constexpr std::size_t kScreenMolecules = 331480;
inline constexpr std::size_t kScreenActives = 1095;

// Label counts of a screen shrunk to a library of `molecules` compounds.
LabelCounts scaled_counts(const ScreenProfile &profile, std::size_t molecules);

}  // namespace molsearch::pipeline
