//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <string_view>

namespace molsearch::chem {

struct ElementInfo {
  std::string_view symbol;
  int atomic_number;
  // Standard atomic weight, unified atomic mass units.
  double mass;
  // Default valence used for implicit hydrogens; 0 if the element has none.
  int default_valence;
  // Member of the SMILES organic subset (writable without brackets).
  bool organic;
  // May be written as a lowercase aromatic atom.
  bool aromatic_allowed;
};

// Returns nullptr for symbols absent from the built-in table. Symbols are
// case-sensitive and given in their canonical capitalization ("Cl", not
// "cl").
const ElementInfo *find_element(std::string_view symbol) noexcept;

}  // namespace molsearch::chem
