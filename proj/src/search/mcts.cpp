//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molsearch/search/mcts.h"

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>

namespace molsearch::search {

using grammar::DerivationState;

double ucb_score(double w_max, double w_mean, std::uint64_t visits,
                 std::uint64_t parent_visits, double c) {
  if (visits == 0)
    return std::numeric_limits<double>::infinity();
  const double explore =
      std::sqrt(std::log(static_cast<double>(std::max<std::uint64_t>(parent_visits, 1)))
                / static_cast<double>(visits));
  return 0.5 * (w_max + w_mean) + c * explore;
}

double reward_value(double f, double delta_phi, double beta) {
  if (beta == 0 || delta_phi == 0)
    return f;
  return f * 2.0 / (1.0 + std::exp(beta * delta_phi));
}

SearchTree::SearchTree(const grammar::Grammar &g, TreeConfig config)
    : grammar_(g), config_(config) {
  nodes_.emplace_back();
}

DerivationState SearchTree::state_of(std::uint32_t node) const {
  std::vector<std::uint32_t> path;
  for (std::uint32_t v = node; nodes_[v].parent != SearchNode::kNone; v = nodes_[v].parent)
    path.push_back(nodes_[v].production);
  DerivationState s = grammar::initial_state(grammar_);
  for (auto it = path.rbegin(); it != path.rend(); ++it)
    s = grammar::expand(s, grammar_, *it);
  return s;
}

std::vector<std::uint32_t>
SearchTree::child_productions(const DerivationState &s) const {
  const std::uint32_t nt = s.form[s.leftmost()].index;
  if (s.depth >= config_.terminal_force_depth)
    return grammar_.forced(nt);
  std::vector<std::uint32_t> all(grammar_.productions(nt).size());
  for (std::uint32_t i = 0; i < all.size(); ++i)
    all[i] = i;
  return all;
}

std::uint32_t SearchTree::select_child(const SearchNode &node) const {
  std::uint32_t best = node.first_child;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::uint32_t i = 0; i < node.child_count; ++i) {
    const SearchNode &ch = nodes_[node.first_child + i];
    if (ch.visits == 0)
      return node.first_child + i;
    const double s = ucb_score(ch.max, ch.mean, ch.visits, node.visits, config_.c);
    if (s > best_score) {
      best_score = s;
      best = node.first_child + i;
    }
  }
  return best;
}

void SearchTree::backpropagate(std::uint32_t node, double w) {
  for (std::uint32_t v = node; v != SearchNode::kNone; v = nodes_[v].parent) {
    SearchNode &n = nodes_[v];
    ++n.visits;
    n.mean += (w - n.mean) / static_cast<double>(n.visits);
    n.max = n.visits == 1 ? w : std::max(n.max, w);
  }
}

IterationResult SearchTree::run_iteration(const Evaluator &evaluate, Rng &rng) {
  std::uint32_t v = 0;
  DerivationState state = grammar::initial_state(grammar_);
  while (nodes_[v].expanded) {
    v = select_child(nodes_[v]);
    state = grammar::expand(state, grammar_, nodes_[v].production);
  }

  if (!nodes_[v].complete) {
    const std::vector<std::uint32_t> prods = child_productions(state);
    const auto first = static_cast<std::uint32_t>(nodes_.size());
    for (std::uint32_t p: prods) {
      SearchNode child;
      child.parent = v;
      child.production = p;
      child.complete = grammar::expand(state, grammar_, p).complete();
      nodes_.push_back(child);
    }
    SearchNode &node = nodes_[v];
    node.expanded = true;
    node.first_child = first;
    node.child_count = static_cast<std::uint32_t>(prods.size());
    v = select_child(node);
    state = grammar::expand(state, grammar_, nodes_[v].production);
  }

  IterationResult res;
  if (state.complete()) {
    ++nodes_[v].own_evaluations;
    res.text = grammar::yield(state, grammar_);
    res.eval = evaluate(res.text);
  } else {
    try {
      res.text = grammar::rollout_complete(state, grammar_, rng, config_.terminal_force_depth);
      res.eval = evaluate(res.text);
    } catch (const grammar::GrammarError &e) {
      if (e.code() != grammar::GrammarErrc::kDepthRunaway)
        throw;
      res.rollout_failed = true;
    }
    ++nodes_[v].own_evaluations;
  }
  backpropagate(v, res.eval.reward);
  return res;
}

std::vector<Discovery> run_search(const grammar::Grammar &g, const Evaluator &evaluate,
                                  const SearchConfig &config, SearchStats *stats,
                                  const ProgressCallback &progress) {
  SearchStats local;
  std::map<std::string, Discovery> best;
  for (std::size_t r = 0; r < config.restarts; ++r) {
    SearchTree tree(g, config.tree);
    Rng rng(config.seed, "rollout", r);
    for (std::size_t it = 1; it <= config.iterations; ++it) {
      IterationResult res = tree.run_iteration(evaluate, rng);
      ++local.evaluations;
      if (res.rollout_failed) {
        ++local.rollout_failures;
      } else if (!res.eval.valid) {
        ++local.invalid;
      } else {
        auto found = best.find(res.eval.key);
        if (found == best.end() || res.eval.reward > found->second.eval.reward) {
          const std::string key = res.eval.key;
          best[key] = Discovery { std::move(res.text), std::move(res.eval), r, it };
        }
      }
      if (progress)
        progress(r, it);
    }
  }
  if (stats != nullptr)
    *stats = local;

  std::vector<Discovery> out;
  out.reserve(best.size());
  for (auto &[key, d]: best)
    out.push_back(std::move(d));
  std::stable_sort(out.begin(), out.end(), [](const Discovery &a, const Discovery &b) {
    if (a.eval.reward != b.eval.reward)
      return a.eval.reward > b.eval.reward;
    return a.eval.key < b.eval.key;
  });
  if (out.size() > config.top_k)
    out.resize(config.top_k);
  return out;
}

namespace {
std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace

void write_results_csv(std::ostream &out, const std::vector<Discovery> &results) {
  out << "rank,smiles,canonical_key,reward,f_assay,energy,delta_energy,restart,iteration\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const Discovery &d = results[i];
    out << i + 1 << ',' << d.smiles << ',' << d.eval.key << ',' << number(d.eval.reward)
        << ',' << number(d.eval.f) << ',' << number(d.eval.energy) << ','
        << number(d.eval.delta_energy) << ',' << d.restart << ',' << d.iteration << '\n';
  }
}

}  // namespace molsearch::search
