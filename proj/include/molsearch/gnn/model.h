//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "molsearch/chem/molecule.h"
#include "molsearch/diff/nn.h"
#include "molsearch/error.h"
#include "molsearch/rng.h"

namespace molsearch::gnn {

using diff::Index;
using diff::NodeId;
using diff::Tensor;

enum class GnnErrc {
  kEmptyGraph,
  kShapeMismatch,
  kNoPositives,
  kEmptyTrainingSet,
  kInsufficientPositives,
};

using GnnError = CodedError<GnnErrc>;

struct GnnConfig {
  std::size_t node_features = chem::kNodeFeatureWidth;
  std::size_t edge_features = chem::kEdgeCategoryCount;
  std::size_t width = 96;
  std::size_t blocks = 3;
  std::size_t head_width = 128;
  std::size_t assays = 4;
  double head_dropout_in = 0.25;
  double head_dropout_hidden = 0.5;

  // Global mean and max pooling of every block's node features.
  std::size_t latent_width() const { return blocks * 2 * width; }
};

// Two Linear -> BatchNorm -> ReLU layers.
struct Mlp {
  diff::Linear l1;
  diff::BatchNorm bn1;
  diff::Linear l2;
  diff::BatchNorm bn2;

  static Mlp init(std::size_t in, std::size_t width, Rng &rng);
};

// One GEC block: message layer followed by edge contraction pooling.
struct GecBlock {
  Mlp edge_mlp;   // (edge + 2 node) -> width
  Mlp node_mlp;   // (node + width) -> width
  diff::Linear pool;  // (2 node + edge) -> 1
};

struct Head {
  diff::Linear l1;
  diff::BatchNorm bn1;
  diff::Linear l2;
  diff::BatchNorm bn2;
  diff::Linear out;
};

struct GnnModel {
  GnnConfig config;
  std::vector<GecBlock> blocks;
  std::vector<Head> heads;

  static GnnModel init(const GnnConfig &config, Rng &rng);

  // Trainable tensors, in a fixed order.
  diff::NamedTensors parameters();
  // Batch-norm running statistics.
  diff::NamedTensors buffers();
};

// Disjoint union of graphs. Node and edge rows are grouped by graph.
struct GraphBatch {
  Tensor node_features;  // N x node_features
  Tensor edge_features;  // M x edge_features, one-hot category
  std::vector<std::uint32_t> source, target;
  std::vector<std::uint32_t> node_graph;
  std::vector<char> self_loop;
  std::size_t num_graphs = 0;
};

// With `canonical`, every graph is first relabelled into canonical order
// (chem::canonicalize), which makes the forward pass, including edge-pool
// tie-breaking, identical for isomorphic inputs.
GraphBatch make_batch(const std::vector<const chem::MolecularGraph *> &graphs,
                      bool canonical = true);

// Graph structure and features inside an expression graph.
struct GraphState {
  NodeId nodes = 0;  // N x d_v
  NodeId edges = 0;  // M x d_e
  Index source, target;
  Index node_graph;
  std::vector<char> self_loop;
  std::size_t num_nodes = 0;
  std::size_t num_edges = 0;
  std::size_t num_graphs = 0;
};

GraphState input_state(diff::Graph &g, const GraphBatch &batch);

struct Context {
  diff::ParamBinder &params;
  bool train = false;
  // Dropout masks are drawn from here in train mode.
  Rng *dropout_rng = nullptr;
  diff::BatchNormRecorder *recorder = nullptr;
};

NodeId apply_mlp(Context &ctx, Mlp &mlp, NodeId x);

// e'_j = Phi_E(e_j + v_s + v_t), Nbar_i = mean of e' over edges into i,
// v'_i = Phi_V(v_i + Nbar_i), where + is concatenation.
GraphState message_layer(Context &ctx, GecBlock &block, const GraphState &in);

struct PoolResult {
  GraphState graph;
  // Normalized score per candidate (non-self-loop) edge, candidates x 1.
  NodeId scores = 0;
  std::vector<std::uint32_t> candidates;
  // Contracted edges (indices into the input edges) in contraction order.
  std::vector<std::uint32_t> contracted;
  // Coarse node of every input node.
  std::vector<std::uint32_t> cluster;
};

// Scores r = W [v_s, v_t, e] + b on non-self-loop edges, normalizes them
// with a softmax over the edges leaving each source node, and contracts
// edges greedily by descending score (ties by edge index) when neither
// endpoint is already merged. A merged node is s (v_s + v_t) / 2; other
// nodes are unchanged. Edges are remapped onto the coarse nodes and
// parallel edges (including the self-loops a contraction produces) are
// averaged.
PoolResult edge_pool(Context &ctx, const diff::Linear &pool,
                     const GraphState &in);

struct ForwardNodes {
  NodeId logits = 0;  // B x assays
  NodeId probs = 0;   // B x assays
  NodeId latent = 0;  // B x latent_width
};

ForwardNodes build_forward(Context &ctx, GnnModel &model, const GraphBatch &batch);

struct Prediction {
  Tensor probs;   // B x assays
  Tensor latent;  // B x latent_width
};

// Eval-mode predictions in chunks of `chunk` graphs.
Prediction predict(GnnModel &model,
                   const std::vector<const chem::MolecularGraph *> &graphs,
                   std::size_t chunk = 256);

// Single-graph forward pass. Train mode needs a dropout stream and uses
// batch statistics of the graph's own rows.
Prediction forward(GnnModel &model, const chem::MolecularGraph &graph,
                   bool train = false, Rng *dropout_rng = nullptr);

}  // namespace molsearch::gnn
