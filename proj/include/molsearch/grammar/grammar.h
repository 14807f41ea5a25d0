//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "molsearch/error.h"
#include "molsearch/rng.h"

namespace molsearch::grammar {

enum class GrammarErrc {
  kSyntax,
  kUndefinedNonterminal,
  kEmptyGrammar,
  kCompleteState,
  kDepthRunaway,
};

using GrammarError = CodedError<GrammarErrc>;

struct Symbol {
  bool terminal = false;
  std::uint32_t index = 0;

  bool operator==(const Symbol &) const = default;
};

using Production = std::vector<Symbol>;

inline constexpr std::size_t kInfiniteCost =
    std::numeric_limits<std::size_t>::max();

class Grammar {
public:
  std::size_t num_nonterminals() const { return nonterminals_.size(); }
  std::size_t num_terminals() const { return terminals_.size(); }
  std::size_t num_productions() const;

  const std::string &nonterminal_name(std::uint32_t nt) const {
    return nonterminals_[nt];
  }
  const std::string &terminal_text(std::uint32_t t) const {
    return terminals_[t];
  }
  // Index of the named nonterminal, or num_nonterminals() if absent.
  std::uint32_t find_nonterminal(std::string_view name) const;

  Symbol start() const { return Symbol { false, start_ }; }

  const std::vector<Production> &productions(std::uint32_t nt) const {
    return productions_[nt];
  }

  // Productions of `nt` whose right-hand side holds terminals only.
  const std::vector<std::uint32_t> &terminal_only(std::uint32_t nt) const {
    return terminal_only_[nt];
  }

  // Fewest expansions needed to derive a terminal string from `nt`;
  // kInfiniteCost if no finite derivation exists.
  std::size_t completion_cost(std::uint32_t nt) const { return cost_[nt]; }

  // Productions of `nt` attaining completion_cost(nt). These are exactly the
  // terminal-only productions when any exist. For a nonterminal without a
  // finite derivation every production is listed.
  const std::vector<std::uint32_t> &forced(std::uint32_t nt) const {
    return forced_[nt];
  }

  std::string symbol_text(Symbol s) const {
    return s.terminal ? terminals_[s.index] : nonterminals_[s.index];
  }

private:
  friend Grammar parse_bnf(std::string_view text);

  void finalize();

  std::vector<std::string> nonterminals_;
  std::vector<std::string> terminals_;
  std::vector<std::vector<Production>> productions_;
  std::uint32_t start_ = 0;

  std::vector<std::vector<std::uint32_t>> terminal_only_;
  std::vector<std::size_t> cost_;
  std::vector<std::vector<std::uint32_t>> forced_;
};

// Format: one rule per line, `Name ::= alt | alt`. Terminals are single
// quoted (\' and \\ escape); anything else is a nonterminal name. A line
// starting with `|` continues the previous rule, repeated left-hand sides
// add productions, `#` starts a comment. The first rule's left-hand side is
// the start symbol.
Grammar parse_bnf(std::string_view text);

Grammar load_bnf(const std::string &path);

struct DerivationState {
  std::vector<Symbol> form;
  std::size_t depth = 0;

  bool complete() const;
  // Position of the leftmost nonterminal, or form.size() if complete.
  std::size_t leftmost() const;
};

DerivationState initial_state(const Grammar &g);

// Applies production `production` of the leftmost nonterminal.
DerivationState expand(const DerivationState &state, const Grammar &g,
                       std::uint32_t production);

std::vector<DerivationState> leftmost_expansions(const DerivationState &state,
                                                 const Grammar &g);

// Symbols joined by single spaces, e.g. "C S".
std::string render(const DerivationState &state, const Grammar &g);

// Concatenated terminal text; the state must be complete.
std::string yield(const DerivationState &state, const Grammar &g);

inline constexpr std::size_t kDefaultDepthCap = 500;

// Production choice at the leftmost nonterminal of a state at `depth`.
// Terminal-only productions win when available; from terminal_force_depth
// on, the choice is further restricted to Grammar::forced().
std::uint32_t choose_production(const Grammar &g, std::uint32_t nt,
                                std::size_t depth,
                                std::size_t terminal_force_depth, Rng &rng);

// Expands the leftmost nonterminal until none remain and returns the
// terminal string. `trace`, if given, receives the production index chosen at
// every expansion (leftmost order).
std::string rollout_complete(const DerivationState &state, const Grammar &g,
                             Rng &rng, std::size_t terminal_force_depth,
                             std::vector<std::uint32_t> *trace = nullptr,
                             std::size_t depth_cap = kDefaultDepthCap);

// Replays a leftmost derivation from `state`; throws if the trace does not
// lead to a complete state.
std::string replay(const DerivationState &state, const Grammar &g,
                   const std::vector<std::uint32_t> &trace);

}  // namespace molsearch::grammar
