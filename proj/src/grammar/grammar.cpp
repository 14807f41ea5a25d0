//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molsearch/grammar/grammar.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

namespace molsearch::grammar {
namespace {
[[noreturn]] void syntax_error(std::size_t line, const std::string &msg) {
  throw GrammarError(GrammarErrc::kSyntax,
                     "line " + std::to_string(line) + ": " + msg);
}

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

struct RawSymbol {
  bool terminal;
  std::string text;
};

using RawAlt = std::vector<RawSymbol>;

// Splits the right-hand side of a rule into alternatives.
std::vector<RawAlt> parse_alternatives(std::string_view rhs, std::size_t line) {
  std::vector<RawAlt> alts(1);
  std::size_t i = 0;
  while (i < rhs.size()) {
    const char c = rhs[i];
    if (std::isspace(static_cast<unsigned char>(c)) != 0) {
      ++i;
    } else if (c == '#') {
      break;
    } else if (c == '|') {
      if (alts.back().empty())
        syntax_error(line, "empty alternative");
      alts.emplace_back();
      ++i;
    } else if (c == '\'') {
      std::string text;
      ++i;
      bool closed = false;
      while (i < rhs.size()) {
        if (rhs[i] == '\\' && i + 1 < rhs.size()) {
          text += rhs[i + 1];
          i += 2;
        } else if (rhs[i] == '\'') {
          closed = true;
          ++i;
          break;
        } else {
          text += rhs[i++];
        }
      }
      if (!closed)
        syntax_error(line, "unterminated terminal");
      if (text.empty())
        syntax_error(line, "empty terminal");
      alts.back().push_back(RawSymbol { true, std::move(text) });
    } else if (is_name_char(c)) {
      std::size_t j = i;
      while (j < rhs.size() && is_name_char(rhs[j]))
        ++j;
      alts.back().push_back(RawSymbol { false, std::string(rhs.substr(i, j - i)) });
      i = j;
    } else {
      syntax_error(line, std::string("unexpected character '") + c + "'");
    }
  }
  if (alts.back().empty())
    syntax_error(line, "empty alternative");
  return alts;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())) != 0)
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())) != 0)
    s.remove_suffix(1);
  return s;
}
}  // namespace

std::size_t Grammar::num_productions() const {
  std::size_t n = 0;
  for (const auto &p: productions_)
    n += p.size();
  return n;
}

std::uint32_t Grammar::find_nonterminal(std::string_view name) const {
  auto it = std::find(nonterminals_.begin(), nonterminals_.end(), name);
  return static_cast<std::uint32_t>(it - nonterminals_.begin());
}

void Grammar::finalize() {
  const std::size_t n = nonterminals_.size();
  terminal_only_.assign(n, {});
  for (std::uint32_t nt = 0; nt < n; ++nt) {
    for (std::uint32_t p = 0; p < productions_[nt].size(); ++p) {
      const Production &rhs = productions_[nt][p];
      if (std::all_of(rhs.begin(), rhs.end(), [](Symbol s) { return s.terminal; }))
        terminal_only_[nt].push_back(p);
    }
  }

  auto production_cost = [&](const Production &rhs) {
    std::size_t c = 1;
    for (Symbol s: rhs) {
      if (s.terminal)
        continue;
      if (cost_[s.index] == kInfiniteCost)
        return kInfiniteCost;
      c += cost_[s.index];
    }
    return c;
  };

  cost_.assign(n, kInfiniteCost);
  for (bool changed = true; changed;) {
    changed = false;
    for (std::uint32_t nt = 0; nt < n; ++nt) {
      for (const Production &rhs: productions_[nt]) {
        const std::size_t c = production_cost(rhs);
        if (c < cost_[nt]) {
          cost_[nt] = c;
          changed = true;
        }
      }
    }
  }

  forced_.assign(n, {});
  for (std::uint32_t nt = 0; nt < n; ++nt) {
    for (std::uint32_t p = 0; p < productions_[nt].size(); ++p) {
      if (cost_[nt] == kInfiniteCost
          || production_cost(productions_[nt][p]) == cost_[nt])
        forced_[nt].push_back(p);
    }
  }
}

Grammar parse_bnf(std::string_view text) {
  struct RawRule {
    std::string lhs;
    std::vector<RawAlt> alts;
    std::size_t line;
  };
  std::vector<RawRule> rules;

  std::size_t line_no = 0;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    std::size_t end = text.find('\n', begin);
    if (end == std::string_view::npos)
      end = text.size();
    std::string_view line = text.substr(begin, end - begin);
    begin = end + 1;
    ++line_no;

    const std::string_view body = trim(line);
    if (body.empty() || body.front() == '#')
      continue;

    if (body.front() == '|') {
      if (rules.empty())
        syntax_error(line_no, "continuation without a rule");
      auto alts = parse_alternatives(body.substr(1), line_no);
      auto &dst = rules.back().alts;
      dst.insert(dst.end(), alts.begin(), alts.end());
      continue;
    }

    const std::size_t sep = body.find("::=");
    if (sep == std::string_view::npos)
      syntax_error(line_no, "expected '::='");
    const std::string_view lhs = trim(body.substr(0, sep));
    if (lhs.empty() || !std::all_of(lhs.begin(), lhs.end(), is_name_char))
      syntax_error(line_no, "invalid rule name '" + std::string(lhs) + "'");
    rules.push_back(RawRule { std::string(lhs),
                              parse_alternatives(body.substr(sep + 3), line_no),
                              line_no });
  }

  if (rules.empty())
    throw GrammarError(GrammarErrc::kEmptyGrammar, "grammar has no rules");

  Grammar g;
  std::map<std::string, std::uint32_t> nt_index;
  for (const RawRule &r: rules) {
    if (nt_index.emplace(r.lhs, static_cast<std::uint32_t>(g.nonterminals_.size()))
            .second)
      g.nonterminals_.push_back(r.lhs);
  }
  g.productions_.assign(g.nonterminals_.size(), {});

  std::map<std::string, std::uint32_t> t_index;
  for (const RawRule &r: rules) {
    auto &dst = g.productions_[nt_index.at(r.lhs)];
    for (const RawAlt &alt: r.alts) {
      Production p;
      for (const RawSymbol &s: alt) {
        if (s.terminal) {
          auto [it, inserted] = t_index.emplace(
              s.text, static_cast<std::uint32_t>(g.terminals_.size()));
          if (inserted)
            g.terminals_.push_back(s.text);
          p.push_back(Symbol { true, it->second });
        } else {
          auto it = nt_index.find(s.text);
          if (it == nt_index.end()) {
            throw GrammarError(GrammarErrc::kUndefinedNonterminal,
                               "line " + std::to_string(r.line)
                                   + ": undefined nonterminal '" + s.text + "'");
          }
          p.push_back(Symbol { false, it->second });
        }
      }
      dst.push_back(std::move(p));
    }
  }
  g.start_ = 0;
  g.finalize();
  return g;
}

Grammar load_bnf(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot open grammar file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_bnf(ss.str());
}

bool DerivationState::complete() const {
  return leftmost() == form.size();
}

std::size_t DerivationState::leftmost() const {
  for (std::size_t i = 0; i < form.size(); ++i) {
    if (!form[i].terminal)
      return i;
  }
  return form.size();
}

DerivationState initial_state(const Grammar &g) {
  return DerivationState { { g.start() }, 0 };
}

DerivationState expand(const DerivationState &state, const Grammar &g,
                       std::uint32_t production) {
  const std::size_t pos = state.leftmost();
  if (pos == state.form.size())
    throw GrammarError(GrammarErrc::kCompleteState, "derivation is complete");
  const auto &prods = g.productions(state.form[pos].index);
  if (production >= prods.size())
    throw Error("production index out of range");
  const Production &rhs = prods[production];

  DerivationState out;
  out.depth = state.depth + 1;
  out.form.reserve(state.form.size() + rhs.size() - 1);
  out.form.insert(out.form.end(), state.form.begin(), state.form.begin() + pos);
  out.form.insert(out.form.end(), rhs.begin(), rhs.end());
  out.form.insert(out.form.end(), state.form.begin() + pos + 1, state.form.end());
  return out;
}

std::vector<DerivationState> leftmost_expansions(const DerivationState &state,
                                                 const Grammar &g) {
  const std::size_t pos = state.leftmost();
  if (pos == state.form.size())
    throw GrammarError(GrammarErrc::kCompleteState, "derivation is complete");
  const auto n = g.productions(state.form[pos].index).size();
  std::vector<DerivationState> out;
  out.reserve(n);
  for (std::uint32_t p = 0; p < n; ++p)
    out.push_back(expand(state, g, p));
  return out;
}

std::string render(const DerivationState &state, const Grammar &g) {
  std::string out;
  for (std::size_t i = 0; i < state.form.size(); ++i) {
    if (i > 0)
      out += ' ';
    out += g.symbol_text(state.form[i]);
  }
  return out;
}

std::string yield(const DerivationState &state, const Grammar &g) {
  std::string out;
  for (Symbol s: state.form) {
    if (!s.terminal)
      throw Error("derivation is not complete");
    out += g.terminal_text(s.index);
  }
  return out;
}

std::uint32_t choose_production(const Grammar &g, std::uint32_t nt,
                                std::size_t depth,
                                std::size_t terminal_force_depth, Rng &rng) {
  const auto &preferred = g.terminal_only(nt);
  if (!preferred.empty())
    return preferred[rng.index(preferred.size())];
  if (depth >= terminal_force_depth) {
    const auto &forced = g.forced(nt);
    return forced[rng.index(forced.size())];
  }
  return static_cast<std::uint32_t>(rng.index(g.productions(nt).size()));
}

std::string rollout_complete(const DerivationState &state, const Grammar &g,
                             Rng &rng, std::size_t terminal_force_depth,
                             std::vector<std::uint32_t> *trace,
                             std::size_t depth_cap) {
  // Leftmost expansion over a stack holding the form in reverse.
  std::vector<Symbol> stack(state.form.rbegin(), state.form.rend());
  std::size_t depth = state.depth;
  std::string out;
  while (!stack.empty()) {
    const Symbol top = stack.back();
    stack.pop_back();
    if (top.terminal) {
      out += g.terminal_text(top.index);
      continue;
    }
    if (depth >= depth_cap) {
      throw GrammarError(GrammarErrc::kDepthRunaway,
                         "rollout exceeded depth cap "
                             + std::to_string(depth_cap));
    }
    const std::uint32_t p =
        choose_production(g, top.index, depth, terminal_force_depth, rng);
    if (trace != nullptr)
      trace->push_back(p);
    const Production &rhs = g.productions(top.index)[p];
    stack.insert(stack.end(), rhs.rbegin(), rhs.rend());
    ++depth;
  }
  return out;
}

std::string replay(const DerivationState &state, const Grammar &g,
                   const std::vector<std::uint32_t> &trace) {
  DerivationState s = state;
  for (std::uint32_t p: trace)
    s = expand(s, g, p);
  if (!s.complete())
    throw Error("trace does not complete the derivation");
  return yield(s, g);
}

}  // namespace molsearch::grammar
