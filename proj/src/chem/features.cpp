//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molsearch/chem/features.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "molsearch/chem/element.h"

namespace molsearch::chem {
namespace {
double order_value(BondOrder order) {
  switch (order) {
  case BondOrder::kSingle:
    return 1.0;
  case BondOrder::kDouble:
    return 2.0;
  case BondOrder::kTriple:
    return 3.0;
  case BondOrder::kAromatic:
    return 1.5;
  }
  return 1.0;
}

std::vector<int> bond_sums(const Molecule &mol) {
  std::vector<double> sums(mol.atoms.size(), 0.0);
  for (const Bond &b: mol.bonds) {
    sums[b.begin] += order_value(b.order);
    sums[b.end] += order_value(b.order);
  }
  std::vector<int> out(sums.size());
  std::transform(sums.begin(), sums.end(), out.begin(),
                 [](double s) { return static_cast<int>(std::floor(s)); });
  return out;
}

int hydrogens_given_sum(const Atom &atom, int sum) {
  if (atom.explicit_h)
    return *atom.explicit_h;
  const ElementInfo *info = find_element(atom.element);
  if (info == nullptr || info->default_valence == 0) {
    throw ChemError(ChemErrc::kUnknownElement,
                    "no default valence for element '" + atom.element + "'");
  }
  return std::max(0, info->default_valence - sum);
}

void check_index(const Molecule &mol, std::size_t atom_index) {
  if (atom_index >= mol.atoms.size())
    throw ChemError(ChemErrc::kInvalidMolecule, "atom index out of range");
}
}  // namespace

int bond_order_sum(const Molecule &mol, std::size_t atom_index) {
  check_index(mol, atom_index);
  double sum = 0.0;
  for (const Bond &b: mol.bonds) {
    if (b.begin == atom_index || b.end == atom_index)
      sum += order_value(b.order);
  }
  return static_cast<int>(std::floor(sum));
}

int implicit_hydrogens(const Molecule &mol, std::size_t atom_index) {
  check_index(mol, atom_index);
  return hydrogens_given_sum(mol.atoms[atom_index],
                             bond_order_sum(mol, atom_index));
}

MolecularGraph featurize(const Molecule &mol) {
  validate(mol);
  const std::vector<int> sums = bond_sums(mol);

  MolecularGraph g;
  g.node_features.reserve(mol.atoms.size());
  for (std::size_t i = 0; i < mol.atoms.size(); ++i) {
    const Atom &atom = mol.atoms[i];
    const ElementInfo *info = find_element(atom.element);
    if (info == nullptr) {
      throw ChemError(ChemErrc::kUnknownElement,
                      "unknown element '" + atom.element + "'");
    }
    const int h = hydrogens_given_sum(atom, sums[i]);
    g.node_features.push_back(NodeFeatures {
        info->mass,
        static_cast<double>(sums[i] + h),
        static_cast<double>(h),
        atom.aromatic ? 1.0 : 0.0,
        static_cast<double>(atom.charge),
    });
  }

  g.edges.reserve(2 * mol.bonds.size() + mol.atoms.size());
  for (const Bond &b: mol.bonds) {
    const EdgeCategory cat = edge_category(b.order);
    g.edges.push_back(GraphEdge { b.begin, b.end, cat });
    g.edges.push_back(GraphEdge { b.end, b.begin, cat });
  }
  for (std::uint32_t i = 0; i < mol.atoms.size(); ++i)
    g.edges.push_back(GraphEdge { i, i, EdgeCategory::kSelfLoop });
  return g;
}

}  // namespace molsearch::chem
