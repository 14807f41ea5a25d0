//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "molsearch/error.h"

namespace molsearch::chem {

enum class BondOrder : std::uint8_t {
  kSingle,
  kDouble,
  kTriple,
  kAromatic,
};

struct Atom {
  std::string element;
  int charge = 0;
  bool aromatic = false;
  // Set for bracket atoms (a bracket atom without "H" has zero hydrogens);
  // unset for organic-subset atoms, whose hydrogens are implicit.
  std::optional<int> explicit_h;
};

struct Bond {
  BondOrder order = BondOrder::kSingle;
  std::uint32_t begin = 0;
  std::uint32_t end = 0;
};

struct Molecule {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
};

enum class EdgeCategory : std::uint8_t {
  kSingle,
  kDouble,
  kTriple,
  kAromatic,
  kSelfLoop,
};

inline constexpr std::size_t kNodeFeatureWidth = 5;
inline constexpr std::size_t kEdgeCategoryCount = 5;

// Node feature layout.
enum NodeFeature : std::size_t {
  kMass = 0,
  kValence = 1,
  kTotalHydrogens = 2,
  kAromaticFlag = 3,
  kFormalCharge = 4,
};

using NodeFeatures = std::array<double, kNodeFeatureWidth>;

struct GraphEdge {
  std::uint32_t source = 0;
  std::uint32_t target = 0;
  EdgeCategory category = EdgeCategory::kSingle;
};

// Directed multigraph: one edge per bond direction plus one self-loop per
// node, so |edges| = 2 * |bonds| + |atoms| for featurized molecules.
struct MolecularGraph {
  std::vector<NodeFeatures> node_features;
  std::vector<GraphEdge> edges;

  std::size_t num_nodes() const { return node_features.size(); }
  std::size_t num_edges() const { return edges.size(); }
};

EdgeCategory edge_category(BondOrder order) noexcept;

enum class ChemErrc {
  kUnknownElement,
  kInvalidMolecule,
};

using ChemError = CodedError<ChemErrc>;

// Checks the structural invariants (valid distinct endpoints, no duplicate
// bond). Throws ChemError(kInvalidMolecule).
void validate(const Molecule &mol);

}  // namespace molsearch::chem
