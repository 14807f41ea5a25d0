//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "molsearch/diff/tensor.h"

namespace molsearch::diff {

using NodeId = std::uint32_t;
using Index = std::shared_ptr<const std::vector<std::uint32_t>>;

Index make_index(std::vector<std::uint32_t> idx);

enum class Op : std::uint8_t {
  kInput,
  kConstant,
  kMatMul,
  kTranspose,
  kAdd,
  kSub,
  kMul,
  kScale,
  kAffine,
  kAddRow,
  kMulRow,
  kMulCol,
  kConcatCols,
  kSliceCols,
  kPadCols,
  kConcatRows,
  kSliceRows,
  kPadRows,
  kGather,
  kSegmentSum,
  kSegmentMax,
  kSegmentMaxScatter,
  kSegmentMaxPick,
  kBroadcastRows,
  kSumRows,
  kBroadcastCols,
  kSumCols,
  kSumAll,
  kBroadcastScalar,
  kRelu,
  kMaskAbove,
  kSigmoid,
  kExp,
  kLog,
  kPow,
  kClampMin,
  kStopGradient,
};

const char *op_name(Op op) noexcept;

// Expression graph over rank-2 tensors. Nodes are appended in topological
// order and evaluated eagerly: a node's value is available as soon as all of
// its inputs have values. gradient() appends the backward pass to the same
// graph, so derivatives are themselves differentiable.
class Graph {
public:
  struct Node {
    Op op;
    std::vector<NodeId> inputs;
    std::size_t rows = 0;
    std::size_t cols = 0;
    // Scale / exponent / threshold, depending on op.
    double a = 0.0;
    double b = 0.0;
    bool flag_a = false;
    bool flag_b = false;
    // Offset and extent for slices and pads, segment count, repeat count.
    std::size_t offset = 0;
    std::size_t extent = 0;
    Index index;
    // Bound value of a view input; owned values live in `value`.
    const Tensor *view = nullptr;
    std::optional<Tensor> value;
  };

  Graph() = default;
  Graph(const Graph &) = delete;
  Graph &operator=(const Graph &) = delete;
  Graph(Graph &&) = default;
  Graph &operator=(Graph &&) = default;

  // Leaves. A view input refers to a tensor owned by the caller, which must
  // outlive the graph or be rebound before use.
  NodeId input(Tensor value);
  NodeId input_view(const Tensor *value);
  NodeId placeholder(std::size_t rows, std::size_t cols);
  NodeId constant(Tensor value);

  // (a or a^T) * (b or b^T)
  NodeId matmul(NodeId a, NodeId b, bool transpose_a = false,
                bool transpose_b = false);
  NodeId transpose(NodeId a);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId a, double s);
  // s * a + t
  NodeId affine(NodeId a, double s, double t);
  // x[m,c] + r[1,c] and x[m,c] * r[1,c] row-broadcast.
  NodeId add_row(NodeId x, NodeId r);
  NodeId mul_row(NodeId x, NodeId r);
  // x[m,c] * v[m,1] column-broadcast.
  NodeId mul_col(NodeId x, NodeId v);

  NodeId concat_cols(const std::vector<NodeId> &parts);
  NodeId slice_cols(NodeId a, std::size_t offset, std::size_t width);
  // Places a into columns [offset, offset + a.cols) of a zero matrix.
  NodeId pad_cols(NodeId a, std::size_t offset, std::size_t total);
  NodeId concat_rows(const std::vector<NodeId> &parts);
  NodeId slice_rows(NodeId a, std::size_t offset, std::size_t count);
  NodeId pad_rows(NodeId a, std::size_t offset, std::size_t total);

  // out[i] = a[idx[i]]
  NodeId gather(NodeId a, Index idx);
  // out[s] = sum of a[i] with seg[i] == s, for s < segments.
  NodeId segment_sum(NodeId a, Index seg, std::size_t segments);
  // Column-wise max per segment; empty segments give 0.
  NodeId segment_max(NodeId a, Index seg, std::size_t segments);
  // Routes g[seg[i]] to the row of a holding each segment's column maximum
  // (first on ties); zero elsewhere. Linear in g.
  NodeId segment_max_scatter(NodeId g, NodeId a, Index seg,
                             std::size_t segments);
  // out[s] = g[argmax row of segment s]; adjoint of the scatter.
  NodeId segment_max_pick(NodeId g, NodeId a, Index seg, std::size_t segments);

  NodeId broadcast_rows(NodeId a, std::size_t rows);
  NodeId sum_rows(NodeId a);
  NodeId broadcast_cols(NodeId a, std::size_t cols);
  NodeId sum_cols(NodeId a);
  NodeId sum_all(NodeId a);
  NodeId broadcast_scalar(NodeId a, std::size_t rows, std::size_t cols);

  NodeId relu(NodeId a);
  // g where x > threshold, 0 elsewhere.
  NodeId mask_above(NodeId g, NodeId x, double threshold);
  NodeId sigmoid(NodeId a);
  NodeId exp(NodeId a);
  NodeId log(NodeId a);
  NodeId pow(NodeId a, double p);
  NodeId clamp_min(NodeId a, double lo);
  NodeId stop_gradient(NodeId a);

  std::size_t size() const { return nodes_.size(); }
  const Node &node(NodeId id) const { return nodes_.at(id); }
  std::size_t rows(NodeId id) const { return nodes_.at(id).rows; }
  std::size_t cols(NodeId id) const { return nodes_.at(id).cols; }

  bool has_value(NodeId id) const;
  // Throws kUnboundLeaf if the node has no value. The reference is
  // invalidated by the next node appended to the graph.
  const Tensor &value(NodeId id) const;

  // Rebinds a leaf and recomputes every dependent node in place.
  void bind(NodeId leaf, const Tensor *value);

private:
  NodeId push(Node node);
  void check_id(NodeId id) const;
  const Tensor *value_ptr(NodeId id) const;

  std::vector<Node> nodes_;
};

// Computes `node` from its inputs' values.
Tensor compute(const Graph::Node &node, const std::vector<const Tensor *> &in);

// Forward values of `outputs` under `bindings` (leaf -> tensor). Leaves not
// in bindings keep the values bound at construction. The graph is not
// modified.
std::vector<Tensor>
evaluate(const Graph &graph,
         const std::unordered_map<NodeId, const Tensor *> &bindings,
         const std::vector<NodeId> &outputs);

// Appends nodes computing d output / d leaf for every leaf in `wrt` and
// returns their ids (same order). The output must be 1 x 1; every wrt node
// must be an input leaf.
std::vector<NodeId> gradient(Graph &graph, NodeId output,
                             const std::vector<NodeId> &wrt);

// Max over components of |analytic - numeric| / max(1, |analytic|), with
// central differences of step h around `probe` bound at `leaf`.
double check_gradient(Graph &graph, NodeId output, NodeId leaf,
                      const Tensor &probe, double h);

}  // namespace molsearch::diff
