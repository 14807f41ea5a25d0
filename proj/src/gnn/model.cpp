//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molsearch/gnn/model.h"

#include <algorithm>
#include <numeric>
#include <string>
#include <tuple>

#include "molsearch/chem/canonical.h"
#include "molsearch/diff/ops.h"

namespace molsearch::gnn {

using diff::Graph;

Mlp Mlp::init(std::size_t in, std::size_t width, Rng &rng) {
  Mlp m { diff::Linear::init(in, width, rng), diff::BatchNorm::init(width), {}, {} };
  m.l2 = diff::Linear::init(width, width, rng);
  m.bn2 = diff::BatchNorm::init(width);
  return m;
}

GnnModel GnnModel::init(const GnnConfig &config, Rng &rng) {
  if (config.width == 0 || config.blocks == 0 || config.assays == 0
      || config.head_width == 0)
    throw GnnError(GnnErrc::kShapeMismatch, "model widths must be positive");
  GnnModel m;
  m.config = config;
  std::size_t dv = config.node_features, de = config.edge_features;
  const std::size_t w = config.width;
  for (std::size_t b = 0; b < config.blocks; ++b) {
    GecBlock block {
      Mlp::init(de + 2 * dv, w, rng),
      Mlp::init(dv + w, w, rng),
      diff::Linear::init(3 * w, 1, rng),
    };
    m.blocks.push_back(std::move(block));
    dv = w;
    de = w;
  }
  const std::size_t latent = config.latent_width();
  const std::size_t h = config.head_width;
  for (std::size_t a = 0; a < config.assays; ++a) {
    Head head;
    head.l1 = diff::Linear::init(latent, h, rng);
    head.bn1 = diff::BatchNorm::init(h);
    head.l2 = diff::Linear::init(h, h, rng);
    head.bn2 = diff::BatchNorm::init(h);
    head.out = diff::Linear::init(h, 1, rng);
    m.heads.push_back(std::move(head));
  }
  return m;
}

namespace {
void collect_mlp(Mlp &m, const std::string &prefix, diff::NamedTensors &out,
                 bool buffers) {
  if (buffers) {
    m.bn1.collect_buffers(prefix + ".bn1", out);
    m.bn2.collect_buffers(prefix + ".bn2", out);
    return;
  }
  m.l1.collect(prefix + ".l1", out);
  m.bn1.collect_params(prefix + ".bn1", out);
  m.l2.collect(prefix + ".l2", out);
  m.bn2.collect_params(prefix + ".bn2", out);
}

void collect_model(GnnModel &model, diff::NamedTensors &out, bool buffers) {
  for (std::size_t b = 0; b < model.blocks.size(); ++b) {
    const std::string p = "block" + std::to_string(b);
    collect_mlp(model.blocks[b].edge_mlp, p + ".edge_mlp", out, buffers);
    collect_mlp(model.blocks[b].node_mlp, p + ".node_mlp", out, buffers);
    if (!buffers)
      model.blocks[b].pool.collect(p + ".pool", out);
  }
  for (std::size_t a = 0; a < model.heads.size(); ++a) {
    Head &h = model.heads[a];
    const std::string p = "head" + std::to_string(a);
    if (buffers) {
      h.bn1.collect_buffers(p + ".bn1", out);
      h.bn2.collect_buffers(p + ".bn2", out);
    } else {
      h.l1.collect(p + ".l1", out);
      h.bn1.collect_params(p + ".bn1", out);
      h.l2.collect(p + ".l2", out);
      h.bn2.collect_params(p + ".bn2", out);
      h.out.collect(p + ".out", out);
    }
  }
}
}  // namespace

diff::NamedTensors GnnModel::parameters() {
  diff::NamedTensors out;
  collect_model(*this, out, false);
  return out;
}

diff::NamedTensors GnnModel::buffers() {
  diff::NamedTensors out;
  collect_model(*this, out, true);
  return out;
}

GraphBatch make_batch(const std::vector<const chem::MolecularGraph *> &graphs,
                      bool canonical) {
  GraphBatch batch;
  batch.num_graphs = graphs.size();
  std::size_t nodes = 0, edges = 0;
  for (const chem::MolecularGraph *g: graphs) {
    if (g->num_nodes() == 0)
      throw GnnError(GnnErrc::kEmptyGraph, "graph without nodes");
    nodes += g->num_nodes();
    edges += g->num_edges();
  }
  batch.node_features = Tensor(nodes, chem::kNodeFeatureWidth);
  batch.edge_features = Tensor(edges, chem::kEdgeCategoryCount);
  batch.source.reserve(edges);
  batch.target.reserve(edges);
  batch.node_graph.reserve(nodes);
  batch.self_loop.reserve(edges);

  std::uint32_t node_base = 0;
  std::size_t edge_row = 0;
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const chem::MolecularGraph &g =
        canonical ? chem::canonicalize(*graphs[gi]) : *graphs[gi];
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
      std::copy(g.node_features[v].begin(), g.node_features[v].end(),
                batch.node_features.row_ptr(node_base + v));
      batch.node_graph.push_back(static_cast<std::uint32_t>(gi));
    }
    for (const chem::GraphEdge &e: g.edges) {
      if (e.source >= g.num_nodes() || e.target >= g.num_nodes())
        throw GnnError(GnnErrc::kShapeMismatch, "edge endpoint out of range");
      batch.source.push_back(node_base + e.source);
      batch.target.push_back(node_base + e.target);
      batch.self_loop.push_back(e.category == chem::EdgeCategory::kSelfLoop
                                || e.source == e.target);
      batch.edge_features(edge_row, static_cast<std::size_t>(e.category)) = 1.0;
      ++edge_row;
    }
    node_base += static_cast<std::uint32_t>(g.num_nodes());
  }
  return batch;
}

GraphState input_state(Graph &g, const GraphBatch &batch) {
  GraphState s;
  s.nodes = g.constant(batch.node_features);
  s.edges = g.constant(batch.edge_features);
  s.source = diff::make_index(batch.source);
  s.target = diff::make_index(batch.target);
  s.node_graph = diff::make_index(batch.node_graph);
  s.self_loop = batch.self_loop;
  s.num_nodes = batch.node_features.rows();
  s.num_edges = batch.edge_features.rows();
  s.num_graphs = batch.num_graphs;
  return s;
}

NodeId apply_mlp(Context &ctx, Mlp &mlp, NodeId x) {
  Graph &g = ctx.params.graph();
  NodeId h = diff::apply_linear(ctx.params, mlp.l1, x);
  h = g.relu(diff::apply_batchnorm(ctx.params, mlp.bn1, h, ctx.train, ctx.recorder));
  h = diff::apply_linear(ctx.params, mlp.l2, h);
  return g.relu(
      diff::apply_batchnorm(ctx.params, mlp.bn2, h, ctx.train, ctx.recorder));
}

GraphState message_layer(Context &ctx, GecBlock &block, const GraphState &in) {
  Graph &g = ctx.params.graph();
  if (g.cols(in.edges) + 2 * g.cols(in.nodes) != block.edge_mlp.l1.in()
      || g.cols(in.nodes) + block.edge_mlp.l2.out() != block.node_mlp.l1.in())
    throw GnnError(GnnErrc::kShapeMismatch, "feature widths do not match layer");

  const NodeId edge_in = g.concat_cols(
      { in.edges, g.gather(in.nodes, in.source), g.gather(in.nodes, in.target) });
  const NodeId e_new = apply_mlp(ctx, block.edge_mlp, edge_in);
  const NodeId nbar = diff::segment_mean(g, e_new, in.target, in.num_nodes);
  const NodeId v_new =
      apply_mlp(ctx, block.node_mlp, g.concat_cols({ in.nodes, nbar }));

  GraphState out = in;
  out.nodes = v_new;
  out.edges = e_new;
  return out;
}

PoolResult edge_pool(Context &ctx, const diff::Linear &pool,
                     const GraphState &in) {
  Graph &g = ctx.params.graph();
  const auto &src = *in.source;
  const auto &tgt = *in.target;
  if (2 * g.cols(in.nodes) + g.cols(in.edges) != pool.in())
    throw GnnError(GnnErrc::kShapeMismatch, "pool width does not match features");

  PoolResult res;
  for (std::uint32_t e = 0; e < in.num_edges; ++e) {
    if (in.self_loop[e] == 0)
      res.candidates.push_back(e);
  }

  std::vector<double> score_values;
  if (!res.candidates.empty()) {
    const Index cand = diff::make_index(res.candidates);
    std::vector<std::uint32_t> cand_src;
    cand_src.reserve(res.candidates.size());
    for (std::uint32_t e: res.candidates)
      cand_src.push_back(src[e]);
    const NodeId feats = g.concat_cols({ g.gather(in.nodes, diff::make_index(cand_src)),
                                         g.gather(g.gather(in.nodes, in.target), cand),
                                         g.gather(in.edges, cand) });
    const NodeId raw = diff::apply_linear(ctx.params, pool, feats);
    res.scores = diff::segment_softmax(g, raw, diff::make_index(std::move(cand_src)),
                                       in.num_nodes);
    score_values = g.value(res.scores).values();
  } else {
    res.scores = g.constant(Tensor(0, 1));
  }

  // Greedy matching by descending score, stable on edge index.
  std::vector<std::uint32_t> order(res.candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return score_values[a] > score_values[b];
  });
  std::vector<char> used(in.num_nodes, 0);
  std::vector<std::int64_t> partner_candidate(in.num_nodes, -1);
  for (std::uint32_t c: order) {
    const std::uint32_t e = res.candidates[c];
    const std::uint32_t s = src[e], t = tgt[e];
    if (s == t || used[s] != 0 || used[t] != 0)
      continue;
    used[s] = used[t] = 1;
    partner_candidate[s] = partner_candidate[t] = c;
    res.contracted.push_back(e);
  }

  if (res.contracted.empty()) {
    res.graph = in;
    res.cluster.resize(in.num_nodes);
    std::iota(res.cluster.begin(), res.cluster.end(), 0);
    return res;
  }

  // Coarse ids in order of first appearance.
  constexpr std::uint32_t kUnset = ~0u;
  res.cluster.assign(in.num_nodes, kUnset);
  std::vector<std::uint32_t> pick;
  std::vector<double> mask;
  std::vector<std::uint32_t> coarse_graph;
  std::uint32_t next = 0;
  const auto &node_graph = *in.node_graph;
  for (std::uint32_t v = 0; v < in.num_nodes; ++v) {
    if (res.cluster[v] != kUnset)
      continue;
    res.cluster[v] = next;
    if (partner_candidate[v] >= 0) {
      const std::uint32_t e = res.candidates[partner_candidate[v]];
      res.cluster[src[e] == v ? tgt[e] : src[e]] = next;
      pick.push_back(static_cast<std::uint32_t>(partner_candidate[v]));
      mask.push_back(1.0);
    } else {
      pick.push_back(0);
      mask.push_back(0.0);
    }
    coarse_graph.push_back(node_graph[v]);
    ++next;
  }
  const std::size_t n_coarse = next;

  const Index cluster = diff::make_index(res.cluster);
  const NodeId merged_mean = diff::segment_mean(g, in.nodes, cluster, n_coarse);
  Tensor mask_t(n_coarse, 1), inv_mask_t(n_coarse, 1);
  for (std::size_t i = 0; i < n_coarse; ++i) {
    mask_t[i] = mask[i];
    inv_mask_t[i] = 1.0 - mask[i];
  }
  const NodeId multiplier =
      g.add(g.mul(g.gather(res.scores, diff::make_index(std::move(pick))),
                  g.constant(std::move(mask_t))),
            g.constant(std::move(inv_mask_t)));
  const NodeId nodes = g.mul_col(merged_mean, multiplier);

  // Remap edges and average parallel ones.
  std::vector<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> keyed;
  keyed.reserve(in.num_edges);
  for (std::uint32_t e = 0; e < in.num_edges; ++e)
    keyed.emplace_back(res.cluster[src[e]], res.cluster[tgt[e]], e);
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::uint32_t> edge_group(in.num_edges);
  std::vector<std::uint32_t> new_src, new_tgt;
  std::vector<char> new_loop;
  for (std::size_t i = 0; i < keyed.size(); ++i) {
    const auto &[s, t, e] = keyed[i];
    if (i == 0 || std::get<0>(keyed[i - 1]) != s || std::get<1>(keyed[i - 1]) != t) {
      new_src.push_back(s);
      new_tgt.push_back(t);
      new_loop.push_back(s == t);
    }
    edge_group[e] = static_cast<std::uint32_t>(new_src.size() - 1);
  }
  const std::size_t m_coarse = new_src.size();
  const NodeId edges =
      diff::segment_mean(g, in.edges, diff::make_index(std::move(edge_group)), m_coarse);

  GraphState &out = res.graph;
  out.nodes = nodes;
  out.edges = edges;
  out.source = diff::make_index(std::move(new_src));
  out.target = diff::make_index(std::move(new_tgt));
  out.node_graph = diff::make_index(std::move(coarse_graph));
  out.self_loop = std::move(new_loop);
  out.num_nodes = n_coarse;
  out.num_edges = m_coarse;
  out.num_graphs = in.num_graphs;
  return res;
}

namespace {
NodeId apply_head(Context &ctx, Head &head, const GnnConfig &cfg, NodeId x) {
  Graph &g = ctx.params.graph();
  if (ctx.train && ctx.dropout_rng != nullptr)
    x = diff::dropout(g, x, cfg.head_dropout_in, *ctx.dropout_rng);
  NodeId h = diff::apply_linear(ctx.params, head.l1, x);
  h = g.relu(diff::apply_batchnorm(ctx.params, head.bn1, h, ctx.train, ctx.recorder));
  if (ctx.train && ctx.dropout_rng != nullptr)
    h = diff::dropout(g, h, cfg.head_dropout_hidden, *ctx.dropout_rng);
  h = diff::apply_linear(ctx.params, head.l2, h);
  h = g.relu(diff::apply_batchnorm(ctx.params, head.bn2, h, ctx.train, ctx.recorder));
  return diff::apply_linear(ctx.params, head.out, h);
}
}  // namespace

ForwardNodes build_forward(Context &ctx, GnnModel &model, const GraphBatch &batch) {
  if (batch.num_graphs == 0)
    throw GnnError(GnnErrc::kEmptyGraph, "empty batch");
  if (batch.node_features.cols() != model.config.node_features
      || batch.edge_features.cols() != model.config.edge_features)
    throw GnnError(GnnErrc::kShapeMismatch, "input feature widths");
  if (ctx.train && ctx.dropout_rng == nullptr)
    throw GnnError(GnnErrc::kShapeMismatch, "train mode needs a dropout stream");

  Graph &g = ctx.params.graph();
  GraphState state = input_state(g, batch);
  std::vector<NodeId> readouts;
  for (GecBlock &block: model.blocks) {
    state = message_layer(ctx, block, state);
    state = edge_pool(ctx, block.pool, state).graph;
    readouts.push_back(
        diff::segment_mean(g, state.nodes, state.node_graph, state.num_graphs));
    readouts.push_back(
        g.segment_max(state.nodes, state.node_graph, state.num_graphs));
  }

  ForwardNodes out;
  out.latent = g.concat_cols(readouts);
  std::vector<NodeId> logits;
  for (Head &head: model.heads)
    logits.push_back(apply_head(ctx, head, model.config, out.latent));
  out.logits = logits.size() == 1 ? logits[0] : g.concat_cols(logits);
  out.probs = g.sigmoid(out.logits);
  return out;
}

Prediction predict(GnnModel &model,
                   const std::vector<const chem::MolecularGraph *> &graphs,
                   std::size_t chunk) {
  Prediction pred { Tensor(graphs.size(), model.config.assays),
                    Tensor(graphs.size(), model.config.latent_width()) };
  chunk = std::max<std::size_t>(chunk, 1);
  for (std::size_t begin = 0; begin < graphs.size(); begin += chunk) {
    const std::size_t end = std::min(graphs.size(), begin + chunk);
    std::vector<const chem::MolecularGraph *> part(graphs.begin() + begin,
                                                   graphs.begin() + end);
    Graph g;
    diff::ParamBinder binder(g);
    Context ctx { binder };
    const GraphBatch batch = make_batch(part);
    const ForwardNodes f = build_forward(ctx, model, batch);
    const Tensor &probs = g.value(f.probs);
    std::copy_n(probs.data(), probs.size(), pred.probs.row_ptr(begin));
    const Tensor &latent = g.value(f.latent);
    std::copy_n(latent.data(), latent.size(), pred.latent.row_ptr(begin));
  }
  return pred;
}

Prediction forward(GnnModel &model, const chem::MolecularGraph &graph,
                   bool train, Rng *dropout_rng) {
  if (!train)
    return predict(model, { &graph });
  Graph g;
  diff::ParamBinder binder(g);
  Context ctx { binder, true, dropout_rng, nullptr };
  const ForwardNodes f = build_forward(ctx, model, make_batch({ &graph }));
  return Prediction { g.value(f.probs), g.value(f.latent) };
}

}  // namespace molsearch::gnn
