//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>

#include "molsearch/chem/molecule.h"

namespace molsearch::chem {

// Bond-order sum of an atom with aromatic bonds counted as 1.5, rounded down.
int bond_order_sum(const Molecule &mol, std::size_t atom_index);

// Total hydrogen count of an atom: the bracket count when given, otherwise
// max(0, default valence - bond_order_sum). Throws ChemError(kUnknownElement)
// when the valence table has no entry for the element.
int implicit_hydrogens(const Molecule &mol, std::size_t atom_index);

// Node features [mass, valence, total H, aromatic, formal charge] and the
// directed edge list: both directions of every bond (in bond order), then one
// self-loop per node.
MolecularGraph featurize(const Molecule &mol);

}  // namespace molsearch::chem
