//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

// Structural predicates over molecules, written as boolean expressions of
// feature comparisons:
//
//   N >= 1 & ring >= 1
//   double_o | (halogen >= 2 & !charged)
//
// A bare feature means "feature >= 1". Features are element symbols (count
// of such atoms) and ring (cycle rank), aromatic (aromatic atoms), double,
// triple (bond counts), double_o (double bonds touching oxygen), halogen,
// charged (atoms with a formal charge), atoms (heavy atoms), branch (atoms
// with three or more neighbours). `&` binds tighter than `|`.

#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "molsearch/chem/molecule.h"

namespace molsearch::pipeline {

class Rule {
public:
  struct Node;

  Rule() = default;
  Rule(std::shared_ptr<const Node> root, std::string text);

  bool operator()(const chem::Molecule &mol) const;
  // Truth value (0 or 1) of every comparison in the rule, left to right.
  std::vector<int> comparisons(const chem::Molecule &mol) const;
  const std::string &text() const { return text_; }

private:
  std::shared_ptr<const Node> root_;
  std::string text_;
};

// Throws PipelineError(kBadRule) with the offending position.
Rule parse_rule(std::string_view text);

// Value of a named feature; throws kBadRule for an unknown name.
int rule_feature(const chem::Molecule &mol, std::string_view name);

}  // namespace molsearch::pipeline
