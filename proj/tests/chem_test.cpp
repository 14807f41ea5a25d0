//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "molsearch/chem/canonical.h"
#include "molsearch/chem/features.h"
#include "molsearch/chem/smiles.h"
#include "molsearch/rng.h"
#include "support.h"

namespace molsearch::chem {
namespace {
using testing::permuted;
using testing::random_molecule;

SmilesErrc parse_error(std::string_view s) {
  try {
    parse_smiles(s);
  } catch (const SmilesError &e) {
    return e.code();
  }
  ADD_FAILURE() << "no error for " << s;
  return SmilesErrc::kSyntax;
}

TEST(SmilesTest, MinimalChains) {
  Molecule cc = parse_smiles("CC");
  ASSERT_EQ(cc.atoms.size(), 2);
  ASSERT_EQ(cc.bonds.size(), 1);
  EXPECT_EQ(cc.atoms[0].element, "C");
  EXPECT_EQ(cc.bonds[0].order, BondOrder::kSingle);

  Molecule co = parse_smiles("C=O");
  ASSERT_EQ(co.bonds.size(), 1);
  EXPECT_EQ(co.bonds[0].order, BondOrder::kDouble);
  EXPECT_EQ(co.atoms[1].element, "O");
}

TEST(SmilesTest, BenzeneRing) {
  Molecule m = parse_smiles("c1ccccc1");
  ASSERT_EQ(m.atoms.size(), 6);
  ASSERT_EQ(m.bonds.size(), 6);
  std::vector<int> degree(6, 0);
  for (const Bond &b: m.bonds) {
    EXPECT_EQ(b.order, BondOrder::kAromatic);
    ++degree[b.begin];
    ++degree[b.end];
  }
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_TRUE(m.atoms[i].aromatic);
    EXPECT_EQ(degree[i], 2);
  }
}

TEST(SmilesTest, BranchesRingsAndBrackets) {
  Molecule m = parse_smiles("CC(=O)O");
  ASSERT_EQ(m.atoms.size(), 4);
  EXPECT_EQ(m.bonds[1].order, BondOrder::kDouble);
  EXPECT_EQ(m.bonds[1].begin, 1);
  EXPECT_EQ(m.bonds[2].begin, 1);

  Molecule n = parse_smiles("[NH4+]");
  EXPECT_EQ(n.atoms[0].charge, 1);
  EXPECT_EQ(n.atoms[0].explicit_h, 4);

  Molecule o = parse_smiles("[O-]C(=O)C");
  EXPECT_EQ(o.atoms[0].charge, -1);
  EXPECT_EQ(o.atoms[0].explicit_h, 0);

  Molecule big = parse_smiles("C%12CCC%12");
  EXPECT_EQ(big.bonds.size(), 4);

  Molecule two = parse_smiles("C1CC2CC1CC2");
  EXPECT_EQ(two.bonds.size(), 8);

  Molecule halo = parse_smiles("ClCBr");
  EXPECT_EQ(halo.atoms[0].element, "Cl");
  EXPECT_EQ(halo.atoms[2].element, "Br");

  Molecule charge2 = parse_smiles("[Fe+++]");
  EXPECT_EQ(charge2.atoms[0].charge, 3);
  Molecule charge3 = parse_smiles("[O-2]");
  EXPECT_EQ(charge3.atoms[0].charge, -2);

  Molecule ring_bond = parse_smiles("C=1CC1");
  EXPECT_EQ(ring_bond.bonds.back().order, BondOrder::kDouble);
}

TEST(SmilesTest, StereoIsIgnoredWithWarning) {
  std::vector<std::string> warnings;
  Molecule m = parse_smiles("F/C=C\\F", &warnings);
  EXPECT_EQ(m.atoms.size(), 4);
  EXPECT_EQ(warnings.size(), 2);

  warnings.clear();
  Molecule c = parse_smiles("N[C@@H](C)O", &warnings);
  EXPECT_EQ(c.atoms[1].explicit_h, 1);
  EXPECT_EQ(warnings.size(), 1);
}

TEST(SmilesTest, Errors) {
  EXPECT_EQ(parse_error(""), SmilesErrc::kEmptyInput);
  EXPECT_EQ(parse_error("C1CC"), SmilesErrc::kUnclosedRing);
  EXPECT_EQ(parse_error("C(C"), SmilesErrc::kUnclosedBranch);
  EXPECT_EQ(parse_error("CX"), SmilesErrc::kUnsupportedToken);
  EXPECT_EQ(parse_error("C.C"), SmilesErrc::kUnsupportedToken);
  EXPECT_EQ(parse_error("[Xx]"), SmilesErrc::kUnsupportedToken);
  EXPECT_EQ(parse_error("C)"), SmilesErrc::kUnsupportedToken);
  EXPECT_EQ(parse_error("C=="), SmilesErrc::kSyntax);
  EXPECT_EQ(parse_error("=C"), SmilesErrc::kSyntax);
  EXPECT_EQ(parse_error("C()"), SmilesErrc::kSyntax);
  EXPECT_EQ(parse_error("C11"), SmilesErrc::kInvalidRingClosure);
  EXPECT_EQ(parse_error("C12CC12"), SmilesErrc::kInvalidRingClosure);

  try {
    parse_smiles("CCQ");
    FAIL();
  } catch (const SmilesError &e) {
    EXPECT_EQ(e.position(), 2);
    EXPECT_NE(std::string(e.what()).find("'Q'"), std::string::npos);
  }
}

TEST(FeaturesTest, ImplicitHydrogens) {
  Molecule cc = parse_smiles("CC");
  EXPECT_EQ(implicit_hydrogens(cc, 0), 3);
  EXPECT_EQ(implicit_hydrogens(cc, 1), 3);
  EXPECT_EQ(implicit_hydrogens(parse_smiles("[NH4+]"), 0), 4);
  EXPECT_EQ(implicit_hydrogens(parse_smiles("C=O"), 1), 0);
  EXPECT_EQ(implicit_hydrogens(parse_smiles("c1ccccc1"), 0), 1);
  EXPECT_EQ(implicit_hydrogens(parse_smiles("c1cc[nH]c1"), 3), 1);
  EXPECT_EQ(implicit_hydrogens(parse_smiles("CC(C)(C)(C)C"), 1), 0);

  Molecule unknown;
  unknown.atoms.push_back(Atom { "Na", 0, false, std::nullopt });
  EXPECT_THROW(implicit_hydrogens(unknown, 0), ChemError);
}

TEST(FeaturesTest, Featurize) {
  MolecularGraph g = featurize(parse_smiles("CC"));
  ASSERT_EQ(g.num_nodes(), 2);
  ASSERT_EQ(g.num_edges(), 4);
  const NodeFeatures expected { 12.011, 4, 3, 0, 0 };
  EXPECT_EQ(g.node_features[0], expected);
  EXPECT_EQ(g.edges[2].category, EdgeCategory::kSelfLoop);
  EXPECT_EQ(g.edges[0].source, g.edges[1].target);

  MolecularGraph single = featurize(parse_smiles("C"));
  EXPECT_EQ(single.num_nodes(), 1);
  ASSERT_EQ(single.num_edges(), 1);
  EXPECT_EQ(single.edges[0].category, EdgeCategory::kSelfLoop);

  MolecularGraph benzene = featurize(parse_smiles("c1ccccc1"));
  const NodeFeatures arom { 12.011, 4, 1, 1, 0 };
  EXPECT_EQ(benzene.node_features[3], arom);

  MolecularGraph oxide = featurize(parse_smiles("C[O-]"));
  const NodeFeatures ox { 15.999, 1, 0, 0, -1 };
  EXPECT_EQ(oxide.node_features[1], ox);
}

TEST(FeaturesTest, EdgeCountIdentityAndDeterminism) {
  for (const char *s: { "CC", "c1ccccc1", "CC(=O)Oc1ccccc1C(=O)O", "C1CC2CC1CC2",
                        "N#CC(Cl)(Br)[NH3+]", "O=C1C=CC(=O)C=C1" }) {
    Molecule m = parse_smiles(s);
    MolecularGraph a = featurize(m), b = featurize(parse_smiles(s));
    EXPECT_EQ(a.num_edges(), 2 * m.bonds.size() + m.atoms.size()) << s;
    ASSERT_EQ(a.node_features, b.node_features);
    std::vector<int> self_loops(a.num_nodes(), 0);
    for (std::size_t i = 0; i < a.num_edges(); ++i) {
      EXPECT_EQ(a.edges[i].source, b.edges[i].source);
      EXPECT_EQ(a.edges[i].target, b.edges[i].target);
      if (a.edges[i].category == EdgeCategory::kSelfLoop) {
        EXPECT_EQ(a.edges[i].source, a.edges[i].target);
        ++self_loops[a.edges[i].source];
      }
    }
    for (int c: self_loops)
      EXPECT_EQ(c, 1);
  }
}

// Brute-force isomorphism over node labels (element, charge, aromaticity,
// explicit H) and bond orders.
bool isomorphic(const Molecule &a, const Molecule &b) {
  const std::size_t n = a.atoms.size();
  if (n != b.atoms.size() || a.bonds.size() != b.bonds.size())
    return false;
  auto label = [](const Atom &x) {
    return std::make_tuple(x.element, x.charge, x.aromatic,
                           x.explicit_h.value_or(-1));
  };
  auto matrix = [n](const Molecule &m) {
    std::vector<int> adj(n * n, -1);
    for (const Bond &bd: m.bonds) {
      adj[bd.begin * n + bd.end] = static_cast<int>(bd.order);
      adj[bd.end * n + bd.begin] = static_cast<int>(bd.order);
    }
    return adj;
  };
  const std::vector<int> ma = matrix(a), mb = matrix(b);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i)
      ok = label(a.atoms[i]) == label(b.atoms[perm[i]]);
    for (std::size_t i = 0; i < n && ok; ++i) {
      for (std::size_t j = 0; j < n && ok; ++j)
        ok = ma[i * n + j] == mb[perm[i] * n + perm[j]];
    }
    if (ok)
      return true;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return false;
}

TEST(CanonicalTest, Examples) {
  EXPECT_EQ(canonical_key(parse_smiles("CO")), canonical_key(parse_smiles("OC")));
  EXPECT_NE(canonical_key(parse_smiles("CC")), canonical_key(parse_smiles("C=C")));
  const std::string ref = canonical_key(parse_smiles("c1ccccc1"));
  Molecule benzene = parse_smiles("c1ccccc1");
  for (std::uint32_t r = 0; r < 6; ++r) {
    std::vector<std::uint32_t> perm(6);
    for (std::uint32_t i = 0; i < 6; ++i)
      perm[i] = (i + r) % 6;
    EXPECT_EQ(canonical_key(permuted(benzene, perm)), ref) << r;
  }
  EXPECT_EQ(canonical_key(parse_smiles("C")), canonical_key(parse_smiles("[CH4]")));
  EXPECT_EQ(canonical_key(parse_smiles("CC")).find(','), std::string::npos);
}

TEST(CanonicalTest, BranchReorderingPairs) {
  const std::vector<std::pair<const char *, const char *>> pairs {
    { "CC(O)N", "CC(N)O" },
    { "CC(=O)Oc1ccccc1C(=O)O", "OC(=O)c1ccccc1OC(C)=O" },
    { "C(C)(O)N", "NC(O)C" },
    { "c1ccc(Cl)cc1Br", "Brc1cc(Cl)ccc1" },
    { "C1CC(CC1)C(=O)N", "NC(=O)C1CCCC1" },
    { "N[C@@H](C)C(=O)O", "OC(=O)C(N)C" },
  };
  for (const auto &[a, b]: pairs)
    EXPECT_EQ(canonical_key(parse_smiles(a)), canonical_key(parse_smiles(b))) << a;
}

TEST(CanonicalTest, SoundAgainstBruteForceOnRandomCorpus) {
  Rng rng(2024);
  std::vector<Molecule> corpus;
  for (int i = 0; i < 1500; ++i)
    corpus.push_back(random_molecule(rng, 1 + rng.index(6)));
  // Add relabelled copies so that many isomorphic pairs exist.
  for (int i = 0; i < 500; ++i) {
    const Molecule &m = corpus[rng.index(corpus.size())];
    std::vector<std::uint32_t> perm(m.atoms.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    corpus.push_back(permuted(m, perm));
  }

  std::vector<std::string> keys;
  for (const Molecule &m: corpus)
    keys.push_back(canonical_key(m));

  std::map<std::string, std::size_t> rep;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto [it, inserted] = rep.emplace(keys[i], i);
    if (!inserted) {
      ASSERT_TRUE(isomorphic(corpus[it->second], corpus[i])) << keys[i];
    }
  }
  std::vector<std::size_t> reps;
  for (const auto &kv: rep)
    reps.push_back(kv.second);
  for (std::size_t i = 0; i < reps.size(); ++i) {
    for (std::size_t j = i + 1; j < reps.size(); ++j)
      ASSERT_FALSE(isomorphic(corpus[reps[i]], corpus[reps[j]]))
          << keys[reps[i]] << " vs " << keys[reps[j]];
  }
}

TEST(CanonicalTest, CanonicalizeIsPermutationInvariant) {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    Molecule m = random_molecule(rng, 2 + rng.index(12));
    std::vector<std::uint32_t> perm(m.atoms.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    MolecularGraph a = canonicalize(featurize(m));
    MolecularGraph b = canonicalize(featurize(permuted(m, perm)));
    ASSERT_EQ(a.node_features, b.node_features);
    ASSERT_EQ(a.num_edges(), b.num_edges());
    for (std::size_t i = 0; i < a.num_edges(); ++i) {
      EXPECT_EQ(a.edges[i].source, b.edges[i].source);
      EXPECT_EQ(a.edges[i].target, b.edges[i].target);
      EXPECT_EQ(a.edges[i].category, b.edges[i].category);
    }
  }
}

TEST(CanonicalTest, HighlySymmetricGraphsStayExact) {
  // Cube-like and cage graphs exercise automorphism pruning.
  LabeledGraph cube;
  cube.node_labels.assign(8, 0);
  for (std::uint32_t v = 0; v < 8; ++v) {
    for (std::uint32_t bit: { 1u, 2u, 4u }) {
      if ((v & bit) == 0)
        cube.edges.push_back({ v, v | bit, 0 });
    }
  }
  CanonicalForm f = canonical_form(cube);
  EXPECT_TRUE(f.exact);

  LabeledGraph ring;
  ring.node_labels.assign(30, 0);
  for (std::uint32_t v = 0; v < 30; ++v)
    ring.edges.push_back({ v, (v + 1) % 30, 0 });
  EXPECT_TRUE(canonical_form(ring).exact);

  LabeledGraph empty;
  empty.node_labels.assign(12, 0);
  CanonicalForm e = canonical_form(empty);
  EXPECT_TRUE(e.exact);
  EXPECT_EQ(e.order.size(), 12);
}

}  // namespace
}  // namespace molsearch::chem
