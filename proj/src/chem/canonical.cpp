//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molsearch/chem/canonical.h"

#include <algorithm>
#include <map>
#include <numeric>
#include <string>
#include <tuple>

#include "molsearch/chem/features.h"

namespace molsearch::chem {
namespace {
using Colors = std::vector<std::uint32_t>;

struct Arc {
  std::uint32_t code;
  std::uint32_t other;
};

class Canonizer {
public:
  Canonizer(const LabeledGraph &g, std::size_t max_leaves)
      : g_(g), n_(g.node_labels.size()), adj_(n_), max_leaves_(max_leaves) {
    for (const auto &e: g.edges) {
      adj_[e.source].push_back(Arc { 2 * e.label, e.target });
      adj_[e.target].push_back(Arc { 2 * e.label + 1, e.source });
    }
  }

  CanonicalForm run() {
    // Colours are cell start positions: the number of vertices whose colour
    // sorts strictly lower.
    std::vector<std::uint32_t> labels = g_.node_labels;
    Colors colors = rank(n_, [&](std::uint32_t a, std::uint32_t b) {
      return labels[a] < labels[b];
    });
    std::vector<std::uint32_t> prefix;
    search(std::move(colors), prefix);

    CanonicalForm form;
    form.position = best_position_;
    form.order.assign(n_, 0);
    for (std::uint32_t v = 0; v < n_; ++v)
      form.order[form.position[v]] = v;
    form.certificate = std::move(best_cert_);
    form.exact = !exhausted_;
    return form;
  }

private:
  template <class Less>
  static Colors rank(std::size_t n, Less less) {
    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), less);
    Colors out(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0 && !less(idx[i - 1], idx[i]))
        out[idx[i]] = out[idx[i - 1]];
      else
        out[idx[i]] = static_cast<std::uint32_t>(i);
    }
    return out;
  }

  static std::size_t count_cells(const Colors &c) {
    std::vector<std::uint32_t> s(c);
    std::sort(s.begin(), s.end());
    return static_cast<std::size_t>(std::unique(s.begin(), s.end()) - s.begin());
  }

  void refine(Colors &colors) const {
    std::size_t cells = count_cells(colors);
    std::vector<std::vector<std::uint64_t>> sig(n_);
    while (cells < n_) {
      for (std::uint32_t v = 0; v < n_; ++v) {
        auto &s = sig[v];
        s.clear();
        s.push_back(colors[v]);
        for (const Arc &a: adj_[v])
          s.push_back((static_cast<std::uint64_t>(a.code) << 32) | colors[a.other]);
        std::sort(s.begin() + 1, s.end());
      }
      colors = rank(n_, [&](std::uint32_t a, std::uint32_t b) {
        return sig[a] < sig[b];
      });
      const std::size_t next = count_cells(colors);
      if (next == cells)
        break;
      cells = next;
    }
  }

  std::vector<std::uint32_t> certificate(const Colors &pos) const {
    std::vector<std::uint32_t> cert;
    cert.reserve(2 + n_ + 3 * g_.edges.size());
    cert.push_back(static_cast<std::uint32_t>(n_));
    std::vector<std::uint32_t> labels(n_);
    for (std::uint32_t v = 0; v < n_; ++v)
      labels[pos[v]] = g_.node_labels[v];
    cert.insert(cert.end(), labels.begin(), labels.end());

    std::vector<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> edges;
    edges.reserve(g_.edges.size());
    for (const auto &e: g_.edges)
      edges.emplace_back(pos[e.source], pos[e.target], e.label);
    std::sort(edges.begin(), edges.end());
    cert.push_back(static_cast<std::uint32_t>(edges.size()));
    for (const auto &[s, t, l]: edges) {
      cert.push_back(s);
      cert.push_back(t);
      cert.push_back(l);
    }
    return cert;
  }

  void record_automorphism(const Colors &leaf_pos, const Colors &ref_pos) {
    std::vector<std::uint32_t> ref_order(n_);
    for (std::uint32_t v = 0; v < n_; ++v)
      ref_order[ref_pos[v]] = v;
    std::vector<std::uint32_t> perm(n_);
    bool identity = true;
    for (std::uint32_t v = 0; v < n_; ++v) {
      perm[v] = ref_order[leaf_pos[v]];
      identity = identity && perm[v] == v;
    }
    if (!identity)
      automorphisms_.push_back(std::move(perm));
  }

  void leaf(const Colors &pos) {
    ++leaves_;
    std::vector<std::uint32_t> cert = certificate(pos);
    if (first_cert_.empty()) {
      first_cert_ = cert;
      first_position_ = pos;
      best_cert_ = std::move(cert);
      best_position_ = pos;
      return;
    }
    if (cert == first_cert_)
      record_automorphism(pos, first_position_);
    if (cert == best_cert_) {
      record_automorphism(pos, best_position_);
    } else if (cert < best_cert_) {
      best_cert_ = std::move(cert);
      best_position_ = pos;
    }
  }

  std::uint32_t find(std::vector<std::uint32_t> &uf, std::uint32_t x) const {
    while (uf[x] != x) {
      uf[x] = uf[uf[x]];
      x = uf[x];
    }
    return x;
  }

  // Orbits of the group generated by the known automorphisms that fix every
  // vertex of the prefix.
  std::vector<std::uint32_t>
  orbits(const std::vector<std::uint32_t> &prefix) const {
    std::vector<std::uint32_t> uf(n_);
    std::iota(uf.begin(), uf.end(), 0);
    for (const auto &perm: automorphisms_) {
      const bool fixes = std::all_of(prefix.begin(), prefix.end(),
                                     [&](std::uint32_t v) { return perm[v] == v; });
      if (!fixes)
        continue;
      for (std::uint32_t v = 0; v < n_; ++v) {
        const std::uint32_t a = find(uf, v), b = find(uf, perm[v]);
        if (a != b)
          uf[std::max(a, b)] = std::min(a, b);
      }
    }
    for (std::uint32_t v = 0; v < n_; ++v)
      uf[v] = find(uf, v);
    return uf;
  }

  void search(Colors colors, std::vector<std::uint32_t> &prefix) {
    refine(colors);

    // Target cell: lowest colour shared by more than one vertex.
    std::vector<std::uint32_t> count(n_, 0);
    for (std::uint32_t c: colors)
      ++count[c];
    std::uint32_t target = static_cast<std::uint32_t>(n_);
    for (std::uint32_t c = 0; c < n_; ++c) {
      if (count[c] > 1) {
        target = c;
        break;
      }
    }
    if (target == n_) {
      leaf(colors);
      return;
    }

    std::vector<std::uint32_t> cell;
    for (std::uint32_t v = 0; v < n_; ++v) {
      if (colors[v] == target)
        cell.push_back(v);
    }

    std::vector<std::uint32_t> tried;
    for (std::uint32_t w: cell) {
      if (exhausted_)
        return;
      if (!tried.empty()) {
        const auto orb = orbits(prefix);
        const bool equivalent = std::any_of(
            tried.begin(), tried.end(),
            [&](std::uint32_t u) { return orb[u] == orb[w]; });
        if (equivalent)
          continue;
      }
      if (leaves_ >= max_leaves_) {
        exhausted_ = true;
        return;
      }
      tried.push_back(w);

      Colors child = colors;
      for (std::uint32_t v: cell) {
        if (v != w)
          child[v] = target + 1;
      }
      prefix.push_back(w);
      search(std::move(child), prefix);
      prefix.pop_back();
    }
  }

  const LabeledGraph &g_;
  std::size_t n_;
  std::vector<std::vector<Arc>> adj_;
  std::size_t max_leaves_;

  std::size_t leaves_ = 0;
  bool exhausted_ = false;
  std::vector<std::vector<std::uint32_t>> automorphisms_;
  std::vector<std::uint32_t> first_cert_, best_cert_;
  Colors first_position_, best_position_;
};

struct AtomLabel {
  std::string element;
  int charge;
  bool aromatic;
  int hydrogens;

  auto tie() const { return std::tie(element, charge, aromatic, hydrogens); }
  bool operator<(const AtomLabel &o) const { return tie() < o.tie(); }
  bool operator==(const AtomLabel &o) const { return tie() == o.tie(); }
};

std::vector<AtomLabel> atom_labels(const Molecule &mol) {
  std::vector<AtomLabel> labels;
  labels.reserve(mol.atoms.size());
  for (std::size_t i = 0; i < mol.atoms.size(); ++i) {
    const Atom &a = mol.atoms[i];
    int h = -1;
    if (a.explicit_h) {
      h = *a.explicit_h;
    } else {
      try {
        h = implicit_hydrogens(mol, i);
      } catch (const ChemError &) {
      }
    }
    labels.push_back(AtomLabel { a.element, a.charge, a.aromatic, h });
  }
  return labels;
}

template <class T>
std::vector<std::uint32_t> dense_ranks(const std::vector<T> &items) {
  std::vector<T> sorted(items);
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<std::uint32_t> out;
  out.reserve(items.size());
  for (const T &x: items) {
    out.push_back(static_cast<std::uint32_t>(
        std::lower_bound(sorted.begin(), sorted.end(), x) - sorted.begin()));
  }
  return out;
}

char order_code(BondOrder order) {
  switch (order) {
  case BondOrder::kSingle:
    return 's';
  case BondOrder::kDouble:
    return 'd';
  case BondOrder::kTriple:
    return 't';
  case BondOrder::kAromatic:
    return 'a';
  }
  return '?';
}

std::string atom_token(const AtomLabel &a) {
  std::string out = a.element;
  if (a.aromatic) {
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  }
  if (a.hydrogens > 0)
    out += "H" + std::to_string(a.hydrogens);
  else if (a.hydrogens < 0)
    out += "H?";
  if (a.charge > 0)
    out += "+" + std::to_string(a.charge);
  else if (a.charge < 0)
    out += "-" + std::to_string(-a.charge);
  return out;
}
}  // namespace

CanonicalForm canonical_form(const LabeledGraph &graph, std::size_t max_leaves) {
  for (const auto &e: graph.edges) {
    if (e.source >= graph.node_labels.size()
        || e.target >= graph.node_labels.size())
      throw ChemError(ChemErrc::kInvalidMolecule, "edge endpoint out of range");
  }
  if (graph.node_labels.empty())
    return CanonicalForm { {}, {}, { 0, 0 }, true };
  return Canonizer(graph, std::max<std::size_t>(max_leaves, 1)).run();
}

LabeledGraph to_labeled_graph(const Molecule &mol) {
  LabeledGraph g;
  g.node_labels = dense_ranks(atom_labels(mol));
  g.edges.reserve(mol.bonds.size());
  for (const Bond &b: mol.bonds) {
    const auto label = static_cast<std::uint32_t>(b.order);
    g.edges.push_back({ b.begin, b.end, label });
    g.edges.push_back({ b.end, b.begin, label });
  }
  return g;
}

LabeledGraph to_labeled_graph(const MolecularGraph &graph) {
  LabeledGraph g;
  g.node_labels = dense_ranks(graph.node_features);
  g.edges.reserve(graph.edges.size());
  for (const GraphEdge &e: graph.edges) {
    g.edges.push_back(
        { e.source, e.target, static_cast<std::uint32_t>(e.category) });
  }
  return g;
}

std::string canonical_key(const Molecule &mol) {
  const std::vector<AtomLabel> labels = atom_labels(mol);
  LabeledGraph g;
  g.node_labels = dense_ranks(labels);
  for (const Bond &b: mol.bonds) {
    const auto label = static_cast<std::uint32_t>(b.order);
    g.edges.push_back({ b.begin, b.end, label });
    g.edges.push_back({ b.end, b.begin, label });
  }
  const CanonicalForm form = canonical_form(g);

  std::string key;
  for (std::size_t p = 0; p < form.order.size(); ++p) {
    if (p > 0)
      key += '.';
    key += atom_token(labels[form.order[p]]);
  }
  key += '|';

  std::vector<std::tuple<std::uint32_t, std::uint32_t, char>> bonds;
  bonds.reserve(mol.bonds.size());
  for (const Bond &b: mol.bonds) {
    const auto [lo, hi] =
        std::minmax(form.position[b.begin], form.position[b.end]);
    bonds.emplace_back(lo, hi, order_code(b.order));
  }
  std::sort(bonds.begin(), bonds.end());
  for (std::size_t i = 0; i < bonds.size(); ++i) {
    if (i > 0)
      key += ';';
    const auto &[lo, hi, code] = bonds[i];
    key += std::to_string(lo) + "-" + std::to_string(hi) + code;
  }
  return key;
}

MolecularGraph canonicalize(const MolecularGraph &graph) {
  const CanonicalForm form = canonical_form(to_labeled_graph(graph));
  MolecularGraph out;
  out.node_features.reserve(graph.num_nodes());
  for (std::uint32_t v: form.order)
    out.node_features.push_back(graph.node_features[v]);
  out.edges.reserve(graph.num_edges());
  for (const GraphEdge &e: graph.edges) {
    out.edges.push_back(
        GraphEdge { form.position[e.source], form.position[e.target], e.category });
  }
  std::sort(out.edges.begin(), out.edges.end(),
            [](const GraphEdge &a, const GraphEdge &b) {
              return std::tie(a.source, a.target, a.category)
                     < std::tie(b.source, b.target, b.category);
            });
  return out;
}

}  // namespace molsearch::chem
