//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molsearch/chem/molecule.h"

#include <algorithm>
#include <set>
#include <utility>

namespace molsearch::chem {

EdgeCategory edge_category(BondOrder order) noexcept {
  switch (order) {
  case BondOrder::kSingle:
    return EdgeCategory::kSingle;
  case BondOrder::kDouble:
    return EdgeCategory::kDouble;
  case BondOrder::kTriple:
    return EdgeCategory::kTriple;
  case BondOrder::kAromatic:
    return EdgeCategory::kAromatic;
  }
  return EdgeCategory::kSingle;
}

void validate(const Molecule &mol) {
  std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
  for (const Bond &b: mol.bonds) {
    if (b.begin >= mol.atoms.size() || b.end >= mol.atoms.size())
      throw ChemError(ChemErrc::kInvalidMolecule, "bond endpoint out of range");
    if (b.begin == b.end)
      throw ChemError(ChemErrc::kInvalidMolecule, "bond onto its own atom");
    auto key = std::minmax(b.begin, b.end);
    if (!seen.insert(key).second)
      throw ChemError(ChemErrc::kInvalidMolecule, "duplicate bond");
  }
}

}  // namespace molsearch::chem
