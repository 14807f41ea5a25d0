//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

// Random inputs shared by the unit tests and the acceptance binary.

#pragma once

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "molsearch/chem/molecule.h"
#include "molsearch/diff/tensor.h"
#include "molsearch/grammar/grammar.h"
#include "molsearch/rng.h"

namespace molsearch::testing {

// Connected molecule on n atoms: a random tree plus up to two extra bonds.
inline chem::Molecule random_molecule(Rng &rng, std::size_t n) {
  using chem::Atom;
  static const std::vector<Atom> palette {
    { "C", 0, false, std::nullopt }, { "N", 0, false, std::nullopt },
    { "O", 0, false, std::nullopt }, { "C", 0, true, std::nullopt },
    { "N", 1, false, 0 },
  };
  chem::Molecule m;
  for (std::size_t i = 0; i < n; ++i)
    m.atoms.push_back(palette[rng.index(rng.bernoulli(0.7) ? 2 : palette.size())]);
  std::set<std::pair<std::uint32_t, std::uint32_t>> have;
  auto add = [&](std::uint32_t a, std::uint32_t b) {
    if (a == b || !have.insert(std::minmax(a, b)).second)
      return;
    const auto order =
        static_cast<chem::BondOrder>(rng.index(rng.bernoulli(0.6) ? 1 : 4));
    m.bonds.push_back(chem::Bond { order, a, b });
  };
  for (std::uint32_t i = 1; i < n; ++i)
    add(static_cast<std::uint32_t>(rng.index(i)), i);
  const std::size_t extra = rng.index(3);
  for (std::size_t k = 0; k < extra && n > 2; ++k)
    add(static_cast<std::uint32_t>(rng.index(n)), static_cast<std::uint32_t>(rng.index(n)));
  return m;
}

inline std::vector<std::uint32_t> random_permutation(Rng &rng, std::size_t n) {
  std::vector<std::uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng.engine());
  return perm;
}

// Atom i moves to perm[i]; bonds keep their order but swap their ends.
inline chem::Molecule permuted(const chem::Molecule &m,
                               const std::vector<std::uint32_t> &perm) {
  chem::Molecule out;
  out.atoms.resize(m.atoms.size());
  for (std::size_t i = 0; i < m.atoms.size(); ++i)
    out.atoms[perm[i]] = m.atoms[i];
  for (const chem::Bond &b: m.bonds)
    out.bonds.push_back(chem::Bond { b.order, perm[b.end], perm[b.begin] });
  return out;
}

// Node i moves to perm[i] and the edge list is shuffled.
inline chem::MolecularGraph relabeled(const chem::MolecularGraph &g,
                                      const std::vector<std::uint32_t> &perm,
                                      Rng &rng) {
  chem::MolecularGraph out;
  out.node_features.resize(g.num_nodes());
  for (std::size_t i = 0; i < g.num_nodes(); ++i)
    out.node_features[perm[i]] = g.node_features[i];
  for (const chem::GraphEdge &e: g.edges)
    out.edges.push_back({ perm[e.source], perm[e.target], e.category });
  std::shuffle(out.edges.begin(), out.edges.end(), rng.engine());
  return out;
}

// n points in 2-D from two tight isotropic Gaussians centred at (-2, 0)
// and (2, 0), chosen with equal probability.
inline diff::Tensor two_cluster_data(Rng &rng, std::size_t n, double spread = 0.05) {
  diff::Tensor t(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    t(i, 0) = (rng.bernoulli(0.5) ? 2.0 : -2.0) + rng.normal(0.0, spread);
    t(i, 1) = rng.normal(0.0, spread);
  }
  return t;
}

// Every terminal string of a finite grammar, by exhaustive leftmost
// expansion. Throws if the language exceeds `limit` strings or the
// derivation depth exceeds `max_depth`.
inline std::set<std::string> enumerate_language(const grammar::Grammar &g,
                                                std::size_t limit = 100000,
                                                std::size_t max_depth = 200) {
  std::set<std::string> out;
  std::vector<grammar::DerivationState> stack { grammar::initial_state(g) };
  while (!stack.empty()) {
    grammar::DerivationState s = std::move(stack.back());
    stack.pop_back();
    if (s.complete()) {
      out.insert(grammar::yield(s, g));
      if (out.size() > limit)
        throw std::runtime_error("language larger than limit");
      continue;
    }
    if (s.depth > max_depth)
      throw std::runtime_error("derivation too deep for enumeration");
    for (auto &child: grammar::leftmost_expansions(s, g))
      stack.push_back(std::move(child));
  }
  return out;
}

// Deterministic pseudo-random reward in [0, 1) for a string.
inline double hashed_reward(const std::string &s, std::uint64_t salt) {
  return static_cast<double>(mix_seed(hash_name(s) ^ salt) >> 11) * 0x1.0p-53;
}

// Fraction of (positive, negative) pairs ranked correctly, ties counting
// one half, by direct enumeration. Counted in halves so the result is exact.
inline double pairwise_auc(const std::vector<double> &scores, const std::vector<int> &labels) {
  std::uint64_t halves = 0, pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1)
      continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0)
        continue;
      ++pairs;
      halves += scores[i] > scores[j] ? 2 : scores[i] == scores[j] ? 1 : 0;
    }
  }
  return static_cast<double>(halves) / static_cast<double>(2 * pairs);
}

// Random scoring problem with many ties: scores on a coarse grid.
inline void random_ranking(Rng &rng, std::vector<double> &scores, std::vector<int> &labels) {
  const std::size_t n = 2 + rng.index(60);
  const std::size_t grid = 1 + rng.index(12);
  scores.resize(n);
  labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = static_cast<double>(rng.index(grid)) / static_cast<double>(grid);
    labels[i] = rng.bernoulli(0.4) ? 1 : 0;
  }
  labels[0] = 1;  // both classes present
  labels[1] = 0;
}

}  // namespace molsearch::testing
