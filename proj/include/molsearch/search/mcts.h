//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "molsearch/grammar/grammar.h"
#include "molsearch/rng.h"

namespace molsearch::search {

// (w_max + w_mean) / 2 + c sqrt(ln N / n); +inf for an unvisited node.
double ucb_score(double w_max, double w_mean, std::uint64_t visits,
                 std::uint64_t parent_visits, double c);

// w = f 2 / (1 + exp(beta delta_phi)), in [0, 2f].
double reward_value(double f, double delta_phi, double beta);

struct Evaluation {
  double reward = 0;
  bool valid = false;  // false for strings that are not molecules
  std::string key;     // dedup key (canonical key for molecules)
  double f = std::numeric_limits<double>::quiet_NaN();  // target-assay probability
  std::vector<double> f_all;
  double energy = std::numeric_limits<double>::quiet_NaN();
  double delta_energy = std::numeric_limits<double>::quiet_NaN();
};

// Maps a terminal string to its reward.
using Evaluator = std::function<Evaluation(const std::string &)>;

struct SearchNode {
  static constexpr std::uint32_t kNone = ~0u;

  std::uint32_t parent = kNone;
  std::uint32_t production = 0;  // applied to the parent's leftmost nonterminal
  std::uint32_t first_child = 0;
  std::uint32_t child_count = 0;
  bool expanded = false;
  bool complete = false;  // derivation has no nonterminal left
  std::uint64_t visits = 0;
  double mean = 0;
  double max = 0;
  // Evaluations that ended at this node rather than below it.
  std::uint64_t own_evaluations = 0;
};

struct TreeConfig {
  double c = 1.4142135623730951;
  std::size_t terminal_force_depth = 30;
};

struct IterationResult {
  std::string text;
  Evaluation eval;
  bool rollout_failed = false;  // hit the depth cap; scored 0
};

// UCT over leftmost derivations. Node states are not stored; they are
// rebuilt from the production path while descending.
class SearchTree {
public:
  SearchTree(const grammar::Grammar &g, TreeConfig config);

  IterationResult run_iteration(const Evaluator &evaluate, Rng &rng);

  const std::vector<SearchNode> &nodes() const { return nodes_; }
  const SearchNode &root() const { return nodes_[0]; }
  grammar::DerivationState state_of(std::uint32_t node) const;

private:
  // Productions offered as children of a state: all of them before the
  // force depth, the forced set from it on.
  std::vector<std::uint32_t> child_productions(const grammar::DerivationState &s) const;
  std::uint32_t select_child(const SearchNode &node) const;
  void backpropagate(std::uint32_t node, double w);

  const grammar::Grammar &grammar_;
  TreeConfig config_;
  std::vector<SearchNode> nodes_;
};

struct SearchConfig {
  std::size_t iterations = 1000000;
  std::size_t restarts = 10;
  std::size_t top_k = 30000;
  TreeConfig tree;
  std::uint64_t seed = 0;
};

struct Discovery {
  std::string smiles;
  Evaluation eval;
  std::size_t restart = 0;
  std::size_t iteration = 0;  // 1-based within its restart
};

struct SearchStats {
  std::size_t evaluations = 0;
  std::size_t invalid = 0;
  std::size_t rollout_failures = 0;
};

using ProgressCallback = std::function<void(std::size_t restart, std::size_t iteration)>;

// Independent trees per restart, merged through a best-per-key set. Returns
// the top_k unique keys by reward (descending, then key ascending).
std::vector<Discovery> run_search(const grammar::Grammar &g, const Evaluator &evaluate,
                                  const SearchConfig &config, SearchStats *stats = nullptr,
                                  const ProgressCallback &progress = {});

// rank,smiles,canonical_key,reward,f_assay,energy,delta_energy,restart,iteration
void write_results_csv(std::ostream &out, const std::vector<Discovery> &results);

}  // namespace molsearch::search
