//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "molsearch/chem/molecule.h"

namespace molsearch::chem {

// Vertex- and edge-labelled directed multigraph in a form suitable for
// canonical labelling. Labels must themselves be isomorphism-invariant.
struct LabeledGraph {
  struct Edge {
    std::uint32_t source;
    std::uint32_t target;
    std::uint32_t label;
  };

  std::vector<std::uint32_t> node_labels;
  std::vector<Edge> edges;
};

struct CanonicalForm {
  // order[p] is the vertex placed at canonical position p.
  std::vector<std::uint32_t> order;
  // position[v] is the canonical position of vertex v.
  std::vector<std::uint32_t> position;
  // Encoding of the relabelled graph; equal for isomorphic inputs.
  std::vector<std::uint32_t> certificate;
  // False only if the search hit its leaf budget, in which case the form is
  // deterministic but not guaranteed canonical.
  bool exact = true;
};

// Individualization-refinement canonical labelling: colour refinement to an
// equitable partition, then a search over individualizations of the first
// non-singleton cell keeping the lexicographically smallest certificate.
// Automorphisms found along the way prune equivalent branches.
CanonicalForm canonical_form(const LabeledGraph &graph,
                             std::size_t max_leaves = 20000);

LabeledGraph to_labeled_graph(const Molecule &mol);

// Graph view of featurized molecules: node labels rank distinct feature
// vectors, edge labels are the edge categories. Self-loops are kept.
LabeledGraph to_labeled_graph(const MolecularGraph &graph);

// Isomorphism-invariant identifier over element, charge and aromaticity
// labels and bond-order edge labels. Not a SMILES string.
std::string canonical_key(const Molecule &mol);

// Relabels nodes (and sorts edges) into canonical order, so that isomorphic
// inputs map to identical graphs.
MolecularGraph canonicalize(const MolecularGraph &graph);

}  // namespace molsearch::chem
