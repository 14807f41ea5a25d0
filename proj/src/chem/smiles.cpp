//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molsearch/chem/smiles.h"

#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>

#include "molsearch/chem/element.h"

namespace molsearch::chem {
namespace {
struct PendingBond {
  BondOrder order;
  std::size_t position;
};

struct RingOpening {
  std::uint32_t atom;
  std::optional<BondOrder> order;
};

[[noreturn]] void fail(SmilesErrc code, std::size_t pos, const std::string &msg) {
  throw SmilesError(code, pos, msg + " at position " + std::to_string(pos));
}

[[noreturn]] void unsupported(std::size_t pos, std::string_view token) {
  fail(SmilesErrc::kUnsupportedToken, pos,
       "unsupported token '" + std::string(token) + "'");
}

class Parser {
public:
  Parser(std::string_view text, std::vector<std::string> *warnings)
      : text_(text), warnings_(warnings) { }

  Molecule run() {
    if (text_.empty())
      fail(SmilesErrc::kEmptyInput, 0, "empty SMILES");

    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      switch (c) {
      case '(':
        open_branch();
        break;
      case ')':
        close_branch();
        break;
      case '-':
        set_bond(BondOrder::kSingle);
        break;
      case '=':
        set_bond(BondOrder::kDouble);
        break;
      case '#':
        set_bond(BondOrder::kTriple);
        break;
      case ':':
        set_bond(BondOrder::kAromatic);
        break;
      case '/':
      case '\\':
        warn("directional bond '" + std::string(1, c) + "' ignored");
        set_bond(BondOrder::kSingle);
        break;
      case '%':
        ring_closure(two_digit_ring_label());
        break;
      case '[':
        bracket_atom();
        break;
      default:
        if (std::isdigit(static_cast<unsigned char>(c)) != 0) {
          ring_closure(c - '0');
          ++pos_;
        } else {
          organic_atom();
        }
      }
    }

    if (pending_)
      fail(SmilesErrc::kSyntax, pending_->position, "dangling bond symbol");
    if (!branches_.empty())
      fail(SmilesErrc::kUnclosedBranch, text_.size(), "unclosed branch");
    if (!rings_.empty()) {
      fail(SmilesErrc::kUnclosedRing, text_.size(),
           "unclosed ring " + std::to_string(rings_.begin()->first));
    }
    return std::move(mol_);
  }

private:
  void warn(std::string msg) {
    if (warnings_ != nullptr)
      warnings_->push_back(std::move(msg) + " at position "
                           + std::to_string(pos_));
  }

  void set_bond(BondOrder order) {
    if (pending_)
      fail(SmilesErrc::kSyntax, pos_, "consecutive bond symbols");
    if (!prev_)
      fail(SmilesErrc::kSyntax, pos_, "bond symbol without preceding atom");
    pending_ = PendingBond { order, pos_ };
    ++pos_;
  }

  void open_branch() {
    if (!prev_)
      fail(SmilesErrc::kSyntax, pos_, "branch without preceding atom");
    if (pending_)
      fail(SmilesErrc::kSyntax, pos_, "bond symbol before branch");
    branches_.push_back(*prev_);
    ++pos_;
  }

  void close_branch() {
    if (branches_.empty())
      unsupported(pos_, ")");
    if (pending_)
      fail(SmilesErrc::kSyntax, pos_, "dangling bond symbol in branch");
    if (pos_ > 0 && text_[pos_ - 1] == '(')
      fail(SmilesErrc::kSyntax, pos_, "empty branch");
    prev_ = branches_.back();
    branches_.pop_back();
    ++pos_;
  }

  int two_digit_ring_label() {
    if (pos_ + 2 >= text_.size())
      fail(SmilesErrc::kSyntax, pos_, "truncated %nn ring label");
    const char d1 = text_[pos_ + 1], d2 = text_[pos_ + 2];
    if (std::isdigit(static_cast<unsigned char>(d1)) == 0
        || std::isdigit(static_cast<unsigned char>(d2)) == 0)
      fail(SmilesErrc::kSyntax, pos_, "malformed %nn ring label");
    pos_ += 3;
    // Keep %nn labels disjoint from single digits.
    return 100 + (d1 - '0') * 10 + (d2 - '0');
  }

  BondOrder implicit_order(std::uint32_t a, std::uint32_t b) const {
    return mol_.atoms[a].aromatic && mol_.atoms[b].aromatic
               ? BondOrder::kAromatic
               : BondOrder::kSingle;
  }

  void add_bond(std::uint32_t a, std::uint32_t b, BondOrder order,
                std::size_t pos) {
    auto key = std::minmax(a, b);
    if (a == b || !bonded_.insert(key).second)
      fail(SmilesErrc::kInvalidRingClosure, pos, "duplicate bond");
    mol_.bonds.push_back(Bond { order, a, b });
  }

  void ring_closure(int label) {
    const std::size_t at = pos_;
    if (!prev_)
      fail(SmilesErrc::kSyntax, at, "ring closure without preceding atom");

    std::optional<BondOrder> order;
    if (pending_)
      order = pending_->order;
    pending_.reset();

    auto it = rings_.find(label);
    if (it == rings_.end()) {
      rings_.emplace(label, RingOpening { *prev_, order });
      return;
    }

    const RingOpening open = it->second;
    rings_.erase(it);
    if (order && open.order && *order != *open.order)
      fail(SmilesErrc::kInvalidRingClosure, at, "conflicting ring bond orders");
    BondOrder resolved = order    ? *order
                         : open.order ? *open.order
                                      : implicit_order(open.atom, *prev_);
    add_bond(open.atom, *prev_, resolved, at);
  }

  void push_atom(Atom atom, std::size_t at) {
    const auto idx = static_cast<std::uint32_t>(mol_.atoms.size());
    mol_.atoms.push_back(std::move(atom));
    if (prev_) {
      BondOrder order = pending_ ? pending_->order : implicit_order(*prev_, idx);
      add_bond(*prev_, idx, order, at);
    } else if (pending_) {
      fail(SmilesErrc::kSyntax, pending_->position,
           "bond symbol without preceding atom");
    }
    pending_.reset();
    prev_ = idx;
  }

  void organic_atom() {
    const std::size_t at = pos_;
    const char c = text_[pos_];

    if (c == 'C' && pos_ + 1 < text_.size() && text_[pos_ + 1] == 'l') {
      pos_ += 2;
      push_atom(Atom { "Cl", 0, false, std::nullopt }, at);
      return;
    }
    if (c == 'B' && pos_ + 1 < text_.size() && text_[pos_ + 1] == 'r') {
      pos_ += 2;
      push_atom(Atom { "Br", 0, false, std::nullopt }, at);
      return;
    }

    std::string symbol(1, c);
    bool aromatic = false;
    if (std::islower(static_cast<unsigned char>(c)) != 0) {
      symbol[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      aromatic = true;
    }
    const ElementInfo *info = find_element(symbol);
    if (info == nullptr || !info->organic
        || (aromatic && !info->aromatic_allowed))
      unsupported(at, std::string(1, c));
    ++pos_;
    push_atom(Atom { std::move(symbol), 0, aromatic, std::nullopt }, at);
  }

  void bracket_atom() {
    const std::size_t at = pos_;
    const std::size_t close = text_.find(']', pos_);
    if (close == std::string_view::npos)
      fail(SmilesErrc::kSyntax, at, "unterminated bracket atom");
    const std::string_view body = text_.substr(pos_ + 1, close - pos_ - 1);
    std::size_t i = 0;

    auto digits = [&]() {
      int v = 0;
      bool any = false;
      while (i < body.size()
             && std::isdigit(static_cast<unsigned char>(body[i])) != 0) {
        v = v * 10 + (body[i] - '0');
        ++i;
        any = true;
      }
      return any ? std::optional<int>(v) : std::nullopt;
    };

    if (digits())
      warn("isotope label ignored");

    if (i >= body.size())
      fail(SmilesErrc::kSyntax, at, "bracket atom without element");

    Atom atom;
    std::string symbol;
    if (std::islower(static_cast<unsigned char>(body[i])) != 0) {
      // Aromatic: "se" or a single letter.
      if (body.substr(i, 2) == "se") {
        symbol = "Se";
        i += 2;
      } else {
        symbol = std::string(
            1, static_cast<char>(std::toupper(static_cast<unsigned char>(body[i]))));
        ++i;
      }
      atom.aromatic = true;
    } else {
      symbol = std::string(1, body[i]);
      ++i;
      if (i < body.size()
          && std::islower(static_cast<unsigned char>(body[i])) != 0) {
        std::string two = symbol + body[i];
        if (find_element(two) != nullptr) {
          symbol = std::move(two);
          ++i;
        }
      }
    }
    const ElementInfo *info = find_element(symbol);
    if (info == nullptr || (atom.aromatic && !info->aromatic_allowed))
      unsupported(at, "[" + std::string(body) + "]");
    atom.element = symbol;

    if (i < body.size() && body[i] == '@') {
      ++i;
      if (i < body.size() && body[i] == '@')
        ++i;
      warn("chirality marker ignored");
    }

    int h = 0;
    if (i < body.size() && body[i] == 'H') {
      ++i;
      h = digits().value_or(1);
    }
    atom.explicit_h = h;

    if (i < body.size() && (body[i] == '+' || body[i] == '-')) {
      const char sign = body[i];
      const int unit = sign == '+' ? 1 : -1;
      ++i;
      if (auto mag = digits()) {
        atom.charge = unit * *mag;
      } else {
        int n = 1;
        while (i < body.size() && body[i] == sign) {
          ++n;
          ++i;
        }
        atom.charge = unit * n;
      }
    }

    if (i < body.size() && body[i] == ':') {
      ++i;
      if (!digits())
        fail(SmilesErrc::kSyntax, at, "malformed atom class");
    }

    if (i != body.size())
      unsupported(at + 1 + i, std::string(body.substr(i)));

    pos_ = close + 1;
    push_atom(std::move(atom), at);
  }

  std::string_view text_;
  std::vector<std::string> *warnings_;
  std::size_t pos_ = 0;
  Molecule mol_;
  std::optional<std::uint32_t> prev_;
  std::optional<PendingBond> pending_;
  std::vector<std::uint32_t> branches_;
  std::map<int, RingOpening> rings_;
  std::set<std::pair<std::uint32_t, std::uint32_t>> bonded_;
};
}  // namespace

Molecule parse_smiles(std::string_view text, std::vector<std::string> *warnings) {
  return Parser(text, warnings).run();
}

}  // namespace molsearch::chem
