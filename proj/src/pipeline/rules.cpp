//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molsearch/pipeline/rules.h"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <vector>

#include "molsearch/chem/element.h"
#include "molsearch/pipeline/dataset.h"

namespace molsearch::pipeline {

struct Rule::Node {
  enum class Kind { kAnd, kOr, kNot, kCompare } kind = Kind::kCompare;
  std::shared_ptr<const Node> lhs, rhs;
  std::string feature;
  std::string op;
  int value = 0;
};

namespace {
using Node = Rule::Node;

bool is_feature_name(std::string_view name) {
  static const char *const named[] = { "ring",     "aromatic", "double", "triple",
                                       "double_o", "halogen",  "charged", "atoms",
                                       "branch" };
  for (const char *n: named) {
    if (name == n)
      return true;
  }
  return chem::find_element(name) != nullptr;
}

class RuleParser {
public:
  explicit RuleParser(std::string_view text): text_(text) { }

  std::shared_ptr<const Node> run() {
    auto e = expr();
    skip();
    if (pos_ != text_.size())
      fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

private:
  [[noreturn]] void fail(const std::string &msg) const {
    throw PipelineError(PipelineErrc::kBadRule, "rule '" + std::string(text_) + "': " + msg
                                                    + " at position " + std::to_string(pos_));
  }

  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])) != 0)
      ++pos_;
  }

  bool eat(char c) {
    skip();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  std::shared_ptr<const Node> binary(Node::Kind kind, std::shared_ptr<const Node> a,
                                     std::shared_ptr<const Node> b) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    return n;
  }

  std::shared_ptr<const Node> expr() {
    auto left = conj();
    while (eat('|'))
      left = binary(Node::Kind::kOr, left, conj());
    return left;
  }

  std::shared_ptr<const Node> conj() {
    auto left = unary();
    while (eat('&'))
      left = binary(Node::Kind::kAnd, left, unary());
    return left;
  }

  std::shared_ptr<const Node> unary() {
    skip();
    if (pos_ < text_.size() && text_[pos_] == '!'
        && (pos_ + 1 >= text_.size() || text_[pos_ + 1] != '=')) {
      ++pos_;
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::kNot;
      n->lhs = unary();
      return n;
    }
    if (eat('(')) {
      auto e = expr();
      if (!eat(')'))
        fail("missing ')'");
      return e;
    }
    return compare();
  }

  std::shared_ptr<const Node> compare() {
    skip();
    const std::size_t start = pos_;
    while (pos_ < text_.size()
           && (std::isalpha(static_cast<unsigned char>(text_[pos_])) != 0 || text_[pos_] == '_'))
      ++pos_;
    if (pos_ == start)
      fail("expected a feature name");
    auto n = std::make_shared<Node>();
    n->feature = std::string(text_.substr(start, pos_ - start));
    if (!is_feature_name(n->feature)) {
      pos_ = start;
      fail("unknown feature '" + n->feature + "'");
    }
    skip();
    static const char *const ops[] = { ">=", "<=", "==", "!=", ">", "<" };
    for (const char *op: ops) {
      if (text_.substr(pos_).starts_with(op)) {
        n->op = op;
        pos_ += n->op.size();
        break;
      }
    }
    if (n->op.empty()) {
      n->op = ">=";
      n->value = 1;
      return n;
    }
    skip();
    const std::size_t num = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])) != 0)
      ++pos_;
    if (num == pos_)
      fail("expected a number");
    n->value = std::stoi(std::string(text_.substr(num, pos_ - num)));
    return n;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

bool eval(const Node &n, const chem::Molecule &mol);

void collect(const Node &n, const chem::Molecule &mol, std::vector<int> &out) {
  if (n.kind == Node::Kind::kCompare) {
    out.push_back(eval(n, mol) ? 1 : 0);
    return;
  }
  collect(*n.lhs, mol, out);
  if (n.rhs)
    collect(*n.rhs, mol, out);
}

bool eval(const Node &n, const chem::Molecule &mol) {
  switch (n.kind) {
  case Node::Kind::kAnd:
    return eval(*n.lhs, mol) && eval(*n.rhs, mol);
  case Node::Kind::kOr:
    return eval(*n.lhs, mol) || eval(*n.rhs, mol);
  case Node::Kind::kNot:
    return !eval(*n.lhs, mol);
  case Node::Kind::kCompare:
    break;
  }
  const int v = rule_feature(mol, n.feature);
  if (n.op == ">=")
    return v >= n.value;
  if (n.op == "<=")
    return v <= n.value;
  if (n.op == "==")
    return v == n.value;
  if (n.op == "!=")
    return v != n.value;
  if (n.op == ">")
    return v > n.value;
  return v < n.value;
}
}  // namespace

Rule::Rule(std::shared_ptr<const Node> root, std::string text)
    : root_(std::move(root)), text_(std::move(text)) { }

bool Rule::operator()(const chem::Molecule &mol) const {
  if (!root_)
    throw PipelineError(PipelineErrc::kBadRule, "empty rule");
  return eval(*root_, mol);
}

std::vector<int> Rule::comparisons(const chem::Molecule &mol) const {
  if (!root_)
    throw PipelineError(PipelineErrc::kBadRule, "empty rule");
  std::vector<int> out;
  collect(*root_, mol, out);
  return out;
}

Rule parse_rule(std::string_view text) {
  return Rule(RuleParser(text).run(), std::string(text));
}

int rule_feature(const chem::Molecule &mol, std::string_view name) {
  auto count_atoms = [&](auto pred) {
    int c = 0;
    for (const chem::Atom &a: mol.atoms)
      c += pred(a) ? 1 : 0;
    return c;
  };
  auto count_bonds = [&](auto pred) {
    int c = 0;
    for (const chem::Bond &b: mol.bonds)
      c += pred(b) ? 1 : 0;
    return c;
  };
  if (name == "atoms")
    return static_cast<int>(mol.atoms.size());
  if (name == "aromatic")
    return count_atoms([](const chem::Atom &a) { return a.aromatic; });
  if (name == "charged")
    return count_atoms([](const chem::Atom &a) { return a.charge != 0; });
  if (name == "halogen") {
    return count_atoms([](const chem::Atom &a) {
      return a.element == "F" || a.element == "Cl" || a.element == "Br" || a.element == "I";
    });
  }
  if (name == "double")
    return count_bonds([](const chem::Bond &b) { return b.order == chem::BondOrder::kDouble; });
  if (name == "triple")
    return count_bonds([](const chem::Bond &b) { return b.order == chem::BondOrder::kTriple; });
  if (name == "double_o") {
    return count_bonds([&](const chem::Bond &b) {
      return b.order == chem::BondOrder::kDouble
             && (mol.atoms[b.begin].element == "O" || mol.atoms[b.end].element == "O");
    });
  }
  if (name == "branch") {
    std::vector<int> degree(mol.atoms.size(), 0);
    for (const chem::Bond &b: mol.bonds) {
      ++degree[b.begin];
      ++degree[b.end];
    }
    return static_cast<int>(std::count_if(degree.begin(), degree.end(),
                                          [](int d) { return d >= 3; }));
  }
  if (name == "ring") {
    // Cycle rank = bonds - atoms + components.
    std::vector<std::size_t> parent(mol.atoms.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
      while (parent[x] != x)
        x = parent[x] = parent[parent[x]];
      return x;
    };
    std::size_t components = mol.atoms.size();
    for (const chem::Bond &b: mol.bonds) {
      const std::size_t x = find(b.begin), y = find(b.end);
      if (x != y) {
        parent[x] = y;
        --components;
      }
    }
    return static_cast<int>(mol.bonds.size() + components - mol.atoms.size());
  }
  if (chem::find_element(name) != nullptr)
    return count_atoms([&](const chem::Atom &a) { return a.element == name; });
  throw PipelineError(PipelineErrc::kBadRule, "unknown feature '" + std::string(name) + "'");
}

}  // namespace molsearch::pipeline
