//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molsearch/diff/graph.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace molsearch::diff {
namespace {
[[noreturn]] void mismatch(const char *op, const std::string &detail) {
  throw DiffError(DiffErrc::kShapeMismatch,
                  std::string(op) + ": shape mismatch " + detail);
}

void check_index_range(const Index &idx, std::size_t bound, const char *op) {
  if (!idx)
    throw DiffError(DiffErrc::kInvalidArgument, std::string(op) + ": null index");
  for (std::uint32_t i: *idx) {
    if (i >= bound) {
      throw DiffError(DiffErrc::kInvalidArgument,
                      std::string(op) + ": index " + std::to_string(i)
                          + " out of range " + std::to_string(bound));
    }
  }
}

// argmax[s * cols + c] = row of the first maximum of column c in segment s,
// or npos for empty segments.
constexpr std::uint32_t kNoRow = std::numeric_limits<std::uint32_t>::max();

std::vector<std::uint32_t> segment_argmax(const Tensor &a,
                                          const std::vector<std::uint32_t> &seg,
                                          std::size_t segments) {
  const std::size_t c = a.cols();
  std::vector<std::uint32_t> arg(segments * c, kNoRow);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const std::size_t s = seg[i];
    const double *row = a.row_ptr(i);
    std::uint32_t *best = arg.data() + s * c;
    for (std::size_t j = 0; j < c; ++j) {
      if (best[j] == kNoRow || row[j] > a(best[j], j))
        best[j] = static_cast<std::uint32_t>(i);
    }
  }
  return arg;
}

Tensor matmul_values(const Tensor &a, const Tensor &b, bool ta, bool tb) {
  const std::size_t m = ta ? a.cols() : a.rows();
  const std::size_t k = ta ? a.rows() : a.cols();
  const std::size_t n = tb ? b.rows() : b.cols();
  Tensor out(m, n);
  if (!ta && !tb) {
    for (std::size_t i = 0; i < m; ++i) {
      double *o = out.row_ptr(i);
      const double *ar = a.row_ptr(i);
      for (std::size_t p = 0; p < k; ++p) {
        const double av = ar[p];
        if (av == 0.0)
          continue;
        const double *br = b.row_ptr(p);
        for (std::size_t j = 0; j < n; ++j)
          o[j] += av * br[j];
      }
    }
  } else if (!ta && tb) {
    // Transposing b first keeps the inner loop contiguous and vectorizable;
    // the per-element summation order matches the dot-product form.
    Tensor bt(k, n);
    for (std::size_t j = 0; j < n; ++j) {
      const double *br = b.row_ptr(j);
      for (std::size_t p = 0; p < k; ++p)
        bt(p, j) = br[p];
    }
    return matmul_values(a, bt, false, false);
  } else if (ta && !tb) {
    for (std::size_t p = 0; p < k; ++p) {
      const double *ar = a.row_ptr(p);
      const double *br = b.row_ptr(p);
      for (std::size_t i = 0; i < m; ++i) {
        const double av = ar[i];
        if (av == 0.0)
          continue;
        double *o = out.row_ptr(i);
        for (std::size_t j = 0; j < n; ++j)
          o[j] += av * br[j];
      }
    }
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      double *o = out.row_ptr(i);
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t p = 0; p < k; ++p)
          s += a(p, i) * b(j, p);
        o[j] = s;
      }
    }
  }
  return out;
}

template <class F>
Tensor unary(const Tensor &a, F f) {
  Tensor out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i)
    out[i] = f(a[i]);
  return out;
}

template <class F>
Tensor binary(const Tensor &a, const Tensor &b, F f) {
  Tensor out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i)
    out[i] = f(a[i], b[i]);
  return out;
}

double stable_sigmoid(double x) {
  if (x >= 0)
    return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
}  // namespace

namespace {
Graph::Node make_node(Op op, std::vector<NodeId> inputs) {
  Graph::Node n;
  n.op = op;
  n.inputs = std::move(inputs);
  return n;
}
}  // namespace

Index make_index(std::vector<std::uint32_t> idx) {
  return std::make_shared<const std::vector<std::uint32_t>>(std::move(idx));
}

const char *op_name(Op op) noexcept {
  switch (op) {
  case Op::kInput: return "input";
  case Op::kConstant: return "constant";
  case Op::kMatMul: return "matmul";
  case Op::kTranspose: return "transpose";
  case Op::kAdd: return "add";
  case Op::kSub: return "sub";
  case Op::kMul: return "mul";
  case Op::kScale: return "scale";
  case Op::kAffine: return "affine";
  case Op::kAddRow: return "add_row";
  case Op::kMulRow: return "mul_row";
  case Op::kMulCol: return "mul_col";
  case Op::kConcatCols: return "concat_cols";
  case Op::kSliceCols: return "slice_cols";
  case Op::kPadCols: return "pad_cols";
  case Op::kConcatRows: return "concat_rows";
  case Op::kSliceRows: return "slice_rows";
  case Op::kPadRows: return "pad_rows";
  case Op::kGather: return "gather";
  case Op::kSegmentSum: return "segment_sum";
  case Op::kSegmentMax: return "segment_max";
  case Op::kSegmentMaxScatter: return "segment_max_scatter";
  case Op::kSegmentMaxPick: return "segment_max_pick";
  case Op::kBroadcastRows: return "broadcast_rows";
  case Op::kSumRows: return "sum_rows";
  case Op::kBroadcastCols: return "broadcast_cols";
  case Op::kSumCols: return "sum_cols";
  case Op::kSumAll: return "sum_all";
  case Op::kBroadcastScalar: return "broadcast_scalar";
  case Op::kRelu: return "relu";
  case Op::kMaskAbove: return "mask_above";
  case Op::kSigmoid: return "sigmoid";
  case Op::kExp: return "exp";
  case Op::kLog: return "log";
  case Op::kPow: return "pow";
  case Op::kClampMin: return "clamp_min";
  case Op::kStopGradient: return "stop_gradient";
  }
  return "?";
}

Tensor compute(const Graph::Node &node, const std::vector<const Tensor *> &in) {
  switch (node.op) {
  case Op::kInput:
  case Op::kConstant:
    throw DiffError(DiffErrc::kInvalidArgument, "leaves are not computed");

  case Op::kMatMul:
    return matmul_values(*in[0], *in[1], node.flag_a, node.flag_b);

  case Op::kTranspose: {
    const Tensor &a = *in[0];
    Tensor out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
      for (std::size_t j = 0; j < a.cols(); ++j)
        out(j, i) = a(i, j);
    }
    return out;
  }

  case Op::kAdd:
    return binary(*in[0], *in[1], [](double x, double y) { return x + y; });
  case Op::kSub:
    return binary(*in[0], *in[1], [](double x, double y) { return x - y; });
  case Op::kMul:
    return binary(*in[0], *in[1], [](double x, double y) { return x * y; });
  case Op::kScale:
    return unary(*in[0], [s = node.a](double x) { return s * x; });
  case Op::kAffine:
    return unary(*in[0], [s = node.a, t = node.b](double x) { return s * x + t; });

  case Op::kAddRow:
  case Op::kMulRow: {
    const Tensor &x = *in[0];
    const double *r = in[1]->data();
    Tensor out(x.rows(), x.cols());
    const bool add = node.op == Op::kAddRow;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const double *xr = x.row_ptr(i);
      double *o = out.row_ptr(i);
      for (std::size_t j = 0; j < x.cols(); ++j)
        o[j] = add ? xr[j] + r[j] : xr[j] * r[j];
    }
    return out;
  }

  case Op::kMulCol: {
    const Tensor &x = *in[0];
    const Tensor &v = *in[1];
    Tensor out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const double *xr = x.row_ptr(i);
      double *o = out.row_ptr(i);
      const double s = v[i];
      for (std::size_t j = 0; j < x.cols(); ++j)
        o[j] = xr[j] * s;
    }
    return out;
  }

  case Op::kConcatCols: {
    Tensor out(node.rows, node.cols);
    std::size_t off = 0;
    for (const Tensor *t: in) {
      for (std::size_t i = 0; i < node.rows; ++i)
        std::copy_n(t->row_ptr(i), t->cols(), out.row_ptr(i) + off);
      off += t->cols();
    }
    return out;
  }

  case Op::kSliceCols: {
    const Tensor &a = *in[0];
    Tensor out(node.rows, node.cols);
    for (std::size_t i = 0; i < node.rows; ++i)
      std::copy_n(a.row_ptr(i) + node.offset, node.cols, out.row_ptr(i));
    return out;
  }

  case Op::kPadCols: {
    const Tensor &a = *in[0];
    Tensor out(node.rows, node.cols);
    for (std::size_t i = 0; i < node.rows; ++i)
      std::copy_n(a.row_ptr(i), a.cols(), out.row_ptr(i) + node.offset);
    return out;
  }

  case Op::kConcatRows: {
    Tensor out(node.rows, node.cols);
    double *o = out.data();
    for (const Tensor *t: in)
      o = std::copy_n(t->data(), t->size(), o);
    return out;
  }

  case Op::kSliceRows: {
    const Tensor &a = *in[0];
    Tensor out(node.rows, node.cols);
    std::copy_n(a.row_ptr(node.offset), node.rows * node.cols, out.data());
    return out;
  }

  case Op::kPadRows: {
    const Tensor &a = *in[0];
    Tensor out(node.rows, node.cols);
    std::copy_n(a.data(), a.size(), out.row_ptr(node.offset));
    return out;
  }

  case Op::kGather: {
    const Tensor &a = *in[0];
    Tensor out(node.rows, node.cols);
    const auto &idx = *node.index;
    for (std::size_t i = 0; i < idx.size(); ++i)
      std::copy_n(a.row_ptr(idx[i]), node.cols, out.row_ptr(i));
    return out;
  }

  case Op::kSegmentSum: {
    const Tensor &a = *in[0];
    Tensor out(node.rows, node.cols);
    const auto &seg = *node.index;
    for (std::size_t i = 0; i < seg.size(); ++i) {
      const double *ar = a.row_ptr(i);
      double *o = out.row_ptr(seg[i]);
      for (std::size_t j = 0; j < node.cols; ++j)
        o[j] += ar[j];
    }
    return out;
  }

  case Op::kSegmentMax: {
    const Tensor &a = *in[0];
    const auto arg = segment_argmax(a, *node.index, node.rows);
    Tensor out(node.rows, node.cols);
    for (std::size_t s = 0; s < node.rows; ++s) {
      for (std::size_t j = 0; j < node.cols; ++j) {
        const std::uint32_t r = arg[s * node.cols + j];
        out(s, j) = r == kNoRow ? 0.0 : a(r, j);
      }
    }
    return out;
  }

  case Op::kSegmentMaxScatter: {
    const Tensor &g = *in[0];
    const Tensor &a = *in[1];
    const auto arg = segment_argmax(a, *node.index, g.rows());
    Tensor out(node.rows, node.cols);
    for (std::size_t s = 0; s < g.rows(); ++s) {
      for (std::size_t j = 0; j < node.cols; ++j) {
        const std::uint32_t r = arg[s * node.cols + j];
        if (r != kNoRow)
          out(r, j) = g(s, j);
      }
    }
    return out;
  }

  case Op::kSegmentMaxPick: {
    const Tensor &g = *in[0];
    const Tensor &a = *in[1];
    const auto arg = segment_argmax(a, *node.index, node.rows);
    Tensor out(node.rows, node.cols);
    for (std::size_t s = 0; s < node.rows; ++s) {
      for (std::size_t j = 0; j < node.cols; ++j) {
        const std::uint32_t r = arg[s * node.cols + j];
        if (r != kNoRow)
          out(s, j) = g(r, j);
      }
    }
    return out;
  }

  case Op::kBroadcastRows: {
    const Tensor &a = *in[0];
    Tensor out(node.rows, node.cols);
    for (std::size_t i = 0; i < node.rows; ++i)
      std::copy_n(a.data(), node.cols, out.row_ptr(i));
    return out;
  }

  case Op::kSumRows: {
    const Tensor &a = *in[0];
    Tensor out(1, node.cols);
    for (std::size_t i = 0; i < a.rows(); ++i) {
      const double *ar = a.row_ptr(i);
      for (std::size_t j = 0; j < node.cols; ++j)
        out[j] += ar[j];
    }
    return out;
  }

  case Op::kBroadcastCols: {
    const Tensor &a = *in[0];
    Tensor out(node.rows, node.cols);
    for (std::size_t i = 0; i < node.rows; ++i)
      std::fill_n(out.row_ptr(i), node.cols, a[i]);
    return out;
  }

  case Op::kSumCols: {
    const Tensor &a = *in[0];
    Tensor out(node.rows, 1);
    for (std::size_t i = 0; i < a.rows(); ++i) {
      const double *ar = a.row_ptr(i);
      double s = 0.0;
      for (std::size_t j = 0; j < a.cols(); ++j)
        s += ar[j];
      out[i] = s;
    }
    return out;
  }

  case Op::kSumAll: {
    double s = 0.0;
    for (double v: in[0]->values())
      s += v;
    return Tensor::scalar(s);
  }

  case Op::kBroadcastScalar:
    return Tensor(node.rows, node.cols, in[0]->item());

  case Op::kRelu:
    return unary(*in[0], [](double x) { return x > 0.0 ? x : 0.0; });
  case Op::kMaskAbove:
    return binary(*in[0], *in[1], [t = node.a](double g, double x) {
      return x > t ? g : 0.0;
    });
  case Op::kSigmoid:
    return unary(*in[0], stable_sigmoid);
  case Op::kExp:
    return unary(*in[0], [](double x) { return std::exp(x); });
  case Op::kLog:
    return unary(*in[0], [](double x) { return std::log(x); });
  case Op::kPow:
    return unary(*in[0], [p = node.a](double x) {
      if (p == 1.0)
        return x;
      if (p == 2.0)
        return x * x;
      if (p == -1.0)
        return 1.0 / x;
      return std::pow(x, p);
    });
  case Op::kClampMin:
    return unary(*in[0], [lo = node.a](double x) { return x > lo ? x : lo; });
  case Op::kStopGradient:
    return *in[0];
  }
  throw DiffError(DiffErrc::kInvalidArgument, "unknown op");
}

void Graph::check_id(NodeId id) const {
  if (id >= nodes_.size())
    throw DiffError(DiffErrc::kInvalidArgument,
                    "node id " + std::to_string(id) + " out of range");
}

const Tensor *Graph::value_ptr(NodeId id) const {
  const Node &n = nodes_[id];
  if (n.view != nullptr)
    return n.view;
  return n.value ? &*n.value : nullptr;
}

bool Graph::has_value(NodeId id) const {
  check_id(id);
  return value_ptr(id) != nullptr;
}

const Tensor &Graph::value(NodeId id) const {
  check_id(id);
  const Tensor *v = value_ptr(id);
  if (v == nullptr) {
    throw DiffError(DiffErrc::kUnboundLeaf,
                    "node " + std::to_string(id) + " has no value");
  }
  return *v;
}

NodeId Graph::push(Node node) {
  for (NodeId in: node.inputs)
    check_id(in);
  if (node.op != Op::kInput && node.op != Op::kConstant) {
    std::vector<const Tensor *> in;
    in.reserve(node.inputs.size());
    bool ready = true;
    for (NodeId i: node.inputs) {
      const Tensor *v = value_ptr(i);
      ready = ready && v != nullptr;
      in.push_back(v);
    }
    if (ready)
      node.value = compute(node, in);
  }
  nodes_.push_back(std::move(node));
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Graph::input(Tensor value) {
  Node n = make_node(Op::kInput, {});
  n.rows = value.rows();
  n.cols = value.cols();
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId Graph::input_view(const Tensor *value) {
  if (value == nullptr)
    throw DiffError(DiffErrc::kUnboundLeaf, "null input view");
  Node n = make_node(Op::kInput, {});
  n.rows = value->rows();
  n.cols = value->cols();
  n.view = value;
  return push(std::move(n));
}

NodeId Graph::placeholder(std::size_t rows, std::size_t cols) {
  Node n = make_node(Op::kInput, {});
  n.rows = rows;
  n.cols = cols;
  return push(std::move(n));
}

NodeId Graph::constant(Tensor value) {
  Node n = make_node(Op::kConstant, {});
  n.rows = value.rows();
  n.cols = value.cols();
  n.value = std::move(value);
  return push(std::move(n));
}

void Graph::bind(NodeId leaf, const Tensor *value) {
  check_id(leaf);
  Node &n = nodes_[leaf];
  if (n.op != Op::kInput)
    throw DiffError(DiffErrc::kInvalidArgument, "bind() needs an input leaf");
  if (value == nullptr || value->rows() != n.rows || value->cols() != n.cols) {
    throw DiffError(DiffErrc::kShapeMismatch,
                    "binding does not match leaf shape "
                        + shape_string(n.rows, n.cols));
  }
  n.view = nullptr;
  n.value = *value;

  std::vector<char> dirty(nodes_.size(), 0);
  dirty[leaf] = 1;
  for (NodeId id = leaf + 1; id < nodes_.size(); ++id) {
    Node &m = nodes_[id];
    if (m.op == Op::kInput || m.op == Op::kConstant)
      continue;
    const bool touched = std::any_of(m.inputs.begin(), m.inputs.end(),
                                     [&](NodeId i) { return dirty[i] != 0; });
    if (!touched)
      continue;
    dirty[id] = 1;
    std::vector<const Tensor *> in;
    bool ready = true;
    for (NodeId i: m.inputs) {
      const Tensor *v = value_ptr(i);
      ready = ready && v != nullptr;
      in.push_back(v);
    }
    if (ready)
      m.value = compute(m, in);
    else
      m.value.reset();
  }
}

NodeId Graph::matmul(NodeId a, NodeId b, bool ta, bool tb) {
  check_id(a);
  check_id(b);
  const std::size_t am = ta ? cols(a) : rows(a), ak = ta ? rows(a) : cols(a);
  const std::size_t bk = tb ? cols(b) : rows(b), bn = tb ? rows(b) : cols(b);
  if (ak != bk) {
    mismatch("matmul", shape_string(am, ak) + " x " + shape_string(bk, bn));
  }
  Node n = make_node(Op::kMatMul, { a, b });
  n.rows = am;
  n.cols = bn;
  n.flag_a = ta;
  n.flag_b = tb;
  return push(std::move(n));
}

NodeId Graph::transpose(NodeId a) {
  check_id(a);
  Node n = make_node(Op::kTranspose, { a });
  n.rows = cols(a);
  n.cols = rows(a);
  return push(std::move(n));
}

namespace {
Graph::Node same_shape_node(const Graph &g, Op op, NodeId a, NodeId b) {
  if (a >= g.size() || b >= g.size())
    throw DiffError(DiffErrc::kInvalidArgument, "node id out of range");
  if (g.rows(a) != g.rows(b) || g.cols(a) != g.cols(b)) {
    mismatch(op_name(op), shape_string(g.rows(a), g.cols(a)) + " vs "
                              + shape_string(g.rows(b), g.cols(b)));
  }
  Graph::Node n = make_node(op, { a, b });
  n.rows = g.rows(a);
  n.cols = g.cols(a);
  return n;
}
}  // namespace

NodeId Graph::add(NodeId a, NodeId b) {
  return push(same_shape_node(*this, Op::kAdd, a, b));
}

NodeId Graph::sub(NodeId a, NodeId b) {
  return push(same_shape_node(*this, Op::kSub, a, b));
}

NodeId Graph::mul(NodeId a, NodeId b) {
  return push(same_shape_node(*this, Op::kMul, a, b));
}

NodeId Graph::scale(NodeId a, double s) {
  check_id(a);
  Node n = make_node(Op::kScale, { a });
  n.rows = rows(a);
  n.cols = cols(a);
  n.a = s;
  return push(std::move(n));
}

NodeId Graph::affine(NodeId a, double s, double t) {
  check_id(a);
  Node n = make_node(Op::kAffine, { a });
  n.rows = rows(a);
  n.cols = cols(a);
  n.a = s;
  n.b = t;
  return push(std::move(n));
}

NodeId Graph::add_row(NodeId x, NodeId r) {
  check_id(x);
  check_id(r);
  if (rows(r) != 1 || cols(r) != cols(x)) {
    mismatch("add_row", shape_string(rows(x), cols(x)) + " + "
                            + shape_string(rows(r), cols(r)));
  }
  Node n = make_node(Op::kAddRow, { x, r });
  n.rows = rows(x);
  n.cols = cols(x);
  return push(std::move(n));
}

NodeId Graph::mul_row(NodeId x, NodeId r) {
  check_id(x);
  check_id(r);
  if (rows(r) != 1 || cols(r) != cols(x)) {
    mismatch("mul_row", shape_string(rows(x), cols(x)) + " * "
                            + shape_string(rows(r), cols(r)));
  }
  Node n = make_node(Op::kMulRow, { x, r });
  n.rows = rows(x);
  n.cols = cols(x);
  return push(std::move(n));
}

NodeId Graph::mul_col(NodeId x, NodeId v) {
  check_id(x);
  check_id(v);
  if (cols(v) != 1 || rows(v) != rows(x)) {
    mismatch("mul_col", shape_string(rows(x), cols(x)) + " * "
                            + shape_string(rows(v), cols(v)));
  }
  Node n = make_node(Op::kMulCol, { x, v });
  n.rows = rows(x);
  n.cols = cols(x);
  return push(std::move(n));
}

NodeId Graph::concat_cols(const std::vector<NodeId> &parts) {
  if (parts.empty())
    throw DiffError(DiffErrc::kInvalidArgument, "concat_cols of nothing");
  Node n = make_node(Op::kConcatCols, parts);
  for (NodeId p: parts)
    check_id(p);
  n.rows = rows(parts[0]);
  for (NodeId p: parts) {
    if (rows(p) != n.rows)
      mismatch("concat_cols", "row counts differ");
    n.cols += cols(p);
  }
  return push(std::move(n));
}

NodeId Graph::slice_cols(NodeId a, std::size_t offset, std::size_t width) {
  check_id(a);
  if (offset + width > cols(a))
    mismatch("slice_cols", "range exceeds " + shape_string(rows(a), cols(a)));
  Node n = make_node(Op::kSliceCols, { a });
  n.rows = rows(a);
  n.cols = width;
  n.offset = offset;
  return push(std::move(n));
}

NodeId Graph::pad_cols(NodeId a, std::size_t offset, std::size_t total) {
  check_id(a);
  if (offset + cols(a) > total)
    mismatch("pad_cols", "range exceeds total width");
  Node n = make_node(Op::kPadCols, { a });
  n.rows = rows(a);
  n.cols = total;
  n.offset = offset;
  return push(std::move(n));
}

NodeId Graph::concat_rows(const std::vector<NodeId> &parts) {
  if (parts.empty())
    throw DiffError(DiffErrc::kInvalidArgument, "concat_rows of nothing");
  for (NodeId p: parts)
    check_id(p);
  Node n = make_node(Op::kConcatRows, parts);
  n.cols = cols(parts[0]);
  for (NodeId p: parts) {
    if (cols(p) != n.cols)
      mismatch("concat_rows", "column counts differ");
    n.rows += rows(p);
  }
  return push(std::move(n));
}

NodeId Graph::slice_rows(NodeId a, std::size_t offset, std::size_t count) {
  check_id(a);
  if (offset + count > rows(a))
    mismatch("slice_rows", "range exceeds " + shape_string(rows(a), cols(a)));
  Node n = make_node(Op::kSliceRows, { a });
  n.rows = count;
  n.cols = cols(a);
  n.offset = offset;
  return push(std::move(n));
}

NodeId Graph::pad_rows(NodeId a, std::size_t offset, std::size_t total) {
  check_id(a);
  if (offset + rows(a) > total)
    mismatch("pad_rows", "range exceeds total height");
  Node n = make_node(Op::kPadRows, { a });
  n.rows = total;
  n.cols = cols(a);
  n.offset = offset;
  return push(std::move(n));
}

NodeId Graph::gather(NodeId a, Index idx) {
  check_id(a);
  check_index_range(idx, rows(a), "gather");
  Node n = make_node(Op::kGather, { a });
  n.rows = idx->size();
  n.cols = cols(a);
  n.index = std::move(idx);
  return push(std::move(n));
}

NodeId Graph::segment_sum(NodeId a, Index seg, std::size_t segments) {
  check_id(a);
  check_index_range(seg, segments, "segment_sum");
  if (seg->size() != rows(a))
    mismatch("segment_sum", "segment ids do not match row count");
  Node n = make_node(Op::kSegmentSum, { a });
  n.rows = segments;
  n.cols = cols(a);
  n.index = std::move(seg);
  return push(std::move(n));
}

NodeId Graph::segment_max(NodeId a, Index seg, std::size_t segments) {
  check_id(a);
  check_index_range(seg, segments, "segment_max");
  if (seg->size() != rows(a))
    mismatch("segment_max", "segment ids do not match row count");
  Node n = make_node(Op::kSegmentMax, { a });
  n.rows = segments;
  n.cols = cols(a);
  n.index = std::move(seg);
  return push(std::move(n));
}

NodeId Graph::segment_max_scatter(NodeId g, NodeId a, Index seg,
                                  std::size_t segments) {
  check_id(g);
  check_id(a);
  check_index_range(seg, segments, "segment_max_scatter");
  if (seg->size() != rows(a) || rows(g) != segments || cols(g) != cols(a))
    mismatch("segment_max_scatter", "inconsistent shapes");
  Node n = make_node(Op::kSegmentMaxScatter, { g, a });
  n.rows = rows(a);
  n.cols = cols(a);
  n.index = std::move(seg);
  return push(std::move(n));
}

NodeId Graph::segment_max_pick(NodeId g, NodeId a, Index seg,
                               std::size_t segments) {
  check_id(g);
  check_id(a);
  check_index_range(seg, segments, "segment_max_pick");
  if (seg->size() != rows(a) || rows(g) != rows(a) || cols(g) != cols(a))
    mismatch("segment_max_pick", "inconsistent shapes");
  Node n = make_node(Op::kSegmentMaxPick, { g, a });
  n.rows = segments;
  n.cols = cols(a);
  n.index = std::move(seg);
  return push(std::move(n));
}

NodeId Graph::broadcast_rows(NodeId a, std::size_t count) {
  check_id(a);
  if (rows(a) != 1)
    mismatch("broadcast_rows", "expects a single row");
  Node n = make_node(Op::kBroadcastRows, { a });
  n.rows = count;
  n.cols = cols(a);
  return push(std::move(n));
}

NodeId Graph::sum_rows(NodeId a) {
  check_id(a);
  Node n = make_node(Op::kSumRows, { a });
  n.rows = 1;
  n.cols = cols(a);
  return push(std::move(n));
}

NodeId Graph::broadcast_cols(NodeId a, std::size_t count) {
  check_id(a);
  if (cols(a) != 1)
    mismatch("broadcast_cols", "expects a single column");
  Node n = make_node(Op::kBroadcastCols, { a });
  n.rows = rows(a);
  n.cols = count;
  return push(std::move(n));
}

NodeId Graph::sum_cols(NodeId a) {
  check_id(a);
  Node n = make_node(Op::kSumCols, { a });
  n.rows = rows(a);
  n.cols = 1;
  return push(std::move(n));
}

NodeId Graph::sum_all(NodeId a) {
  check_id(a);
  Node n = make_node(Op::kSumAll, { a });
  n.rows = 1;
  n.cols = 1;
  return push(std::move(n));
}

NodeId Graph::broadcast_scalar(NodeId a, std::size_t r, std::size_t c) {
  check_id(a);
  if (rows(a) != 1 || cols(a) != 1)
    mismatch("broadcast_scalar", "expects a scalar");
  Node n = make_node(Op::kBroadcastScalar, { a });
  n.rows = r;
  n.cols = c;
  return push(std::move(n));
}

namespace {
Graph::Node unary_node(const Graph &g, Op op, NodeId a, double p = 0.0) {
  if (a >= g.size())
    throw DiffError(DiffErrc::kInvalidArgument, "node id out of range");
  Graph::Node n = make_node(op, { a });
  n.rows = g.rows(a);
  n.cols = g.cols(a);
  n.a = p;
  return n;
}
}  // namespace

NodeId Graph::relu(NodeId a) { return push(unary_node(*this, Op::kRelu, a)); }

NodeId Graph::mask_above(NodeId g, NodeId x, double threshold) {
  Node n = same_shape_node(*this, Op::kMaskAbove, g, x);
  n.a = threshold;
  return push(std::move(n));
}

NodeId Graph::sigmoid(NodeId a) {
  return push(unary_node(*this, Op::kSigmoid, a));
}

NodeId Graph::exp(NodeId a) { return push(unary_node(*this, Op::kExp, a)); }

NodeId Graph::log(NodeId a) { return push(unary_node(*this, Op::kLog, a)); }

NodeId Graph::pow(NodeId a, double p) {
  return push(unary_node(*this, Op::kPow, a, p));
}

NodeId Graph::clamp_min(NodeId a, double lo) {
  return push(unary_node(*this, Op::kClampMin, a, lo));
}

NodeId Graph::stop_gradient(NodeId a) {
  return push(unary_node(*this, Op::kStopGradient, a));
}

std::vector<Tensor>
evaluate(const Graph &graph,
         const std::unordered_map<NodeId, const Tensor *> &bindings,
         const std::vector<NodeId> &outputs) {
  const std::size_t n = graph.size();
  for (const auto &[leaf, t]: bindings) {
    if (leaf >= n || graph.node(leaf).op != Op::kInput)
      throw DiffError(DiffErrc::kInvalidArgument, "binding target is not an input");
    if (t == nullptr || t->rows() != graph.rows(leaf)
        || t->cols() != graph.cols(leaf)) {
      throw DiffError(DiffErrc::kShapeMismatch,
                      "binding does not match leaf shape "
                          + shape_string(graph.rows(leaf), graph.cols(leaf)));
    }
  }

  std::vector<char> needed(n, 0);
  NodeId top = 0;
  for (NodeId o: outputs) {
    if (o >= n)
      throw DiffError(DiffErrc::kInvalidArgument, "output id out of range");
    needed[o] = 1;
    top = std::max(top, o);
  }
  for (NodeId id = top + 1; id-- > 0;) {
    if (needed[id] == 0)
      continue;
    for (NodeId i: graph.node(id).inputs)
      needed[i] = 1;
  }

  // Nodes independent of the rebound leaves reuse the stored values.
  std::vector<char> dirty(n, 0);
  std::vector<std::optional<Tensor>> local(n);
  std::vector<const Tensor *> ptr(n, nullptr);
  for (NodeId id = 0; id <= top && !outputs.empty(); ++id) {
    if (needed[id] == 0)
      continue;
    const Graph::Node &node = graph.node(id);
    if (node.op == Op::kInput) {
      auto it = bindings.find(id);
      if (it != bindings.end()) {
        ptr[id] = it->second;
        dirty[id] = 1;
      } else if (graph.has_value(id)) {
        ptr[id] = &graph.value(id);
      } else {
        throw DiffError(DiffErrc::kUnboundLeaf,
                        "leaf " + std::to_string(id) + " is unbound");
      }
      continue;
    }
    if (node.op == Op::kConstant) {
      ptr[id] = &graph.value(id);
      continue;
    }
    bool touched = false;
    std::vector<const Tensor *> in;
    in.reserve(node.inputs.size());
    for (NodeId i: node.inputs) {
      touched = touched || dirty[i] != 0;
      in.push_back(ptr[i]);
    }
    if (!touched && graph.has_value(id)) {
      ptr[id] = &graph.value(id);
      continue;
    }
    dirty[id] = 1;
    local[id] = compute(node, in);
    ptr[id] = &*local[id];
  }

  std::vector<Tensor> out;
  out.reserve(outputs.size());
  for (NodeId o: outputs)
    out.push_back(*ptr[o]);
  return out;
}

std::vector<NodeId> gradient(Graph &g, NodeId output,
                             const std::vector<NodeId> &wrt) {
  if (output >= g.size())
    throw DiffError(DiffErrc::kInvalidArgument, "output id out of range");
  if (g.rows(output) != 1 || g.cols(output) != 1) {
    throw DiffError(DiffErrc::kNonScalarOutput,
                    "gradient of non-scalar output of shape "
                        + shape_string(g.rows(output), g.cols(output)));
  }
  for (NodeId w: wrt) {
    if (w >= g.size())
      throw DiffError(DiffErrc::kInvalidArgument, "wrt id out of range");
    if (g.node(w).op != Op::kInput) {
      throw DiffError(DiffErrc::kNonDifferentiableOp,
                      std::string("cannot differentiate with respect to a ")
                          + op_name(g.node(w).op) + " node");
    }
  }

  // Nodes that depend on some requested leaf.
  const std::size_t n = output + 1;
  std::vector<char> live(n, 0);
  for (NodeId w: wrt) {
    if (w < n)
      live[w] = 1;
  }
  for (NodeId id = 0; id < n; ++id) {
    if (live[id] != 0)
      continue;
    const Graph::Node &node = g.node(id);
    if (node.op == Op::kStopGradient || node.op == Op::kConstant)
      continue;
    for (NodeId i: node.inputs) {
      if (live[i] != 0) {
        live[id] = 1;
        break;
      }
    }
  }

  std::vector<std::optional<NodeId>> adj(n);
  auto accumulate = [&](NodeId target, NodeId contrib) {
    if (live[target] == 0)
      return;
    adj[target] = adj[target] ? g.add(*adj[target], contrib) : contrib;
  };

  if (live[output] != 0)
    adj[output] = g.constant(Tensor::scalar(1.0));

  for (NodeId id = output + 1; id-- > 0;) {
    if (!adj[id] || live[id] == 0)
      continue;
    // Copy: appending nodes may reallocate the node storage.
    const Graph::Node node = g.node(id);
    const NodeId gy = *adj[id];
    const auto &in = node.inputs;
    auto wants = [&](std::size_t k) { return live[in[k]] != 0; };

    switch (node.op) {
    case Op::kInput:
    case Op::kConstant:
    case Op::kStopGradient:
      break;

    case Op::kMatMul: {
      const NodeId a = in[0], b = in[1];
      const bool ta = node.flag_a, tb = node.flag_b;
      if (wants(0)) {
        NodeId ga;
        if (!ta && !tb)
          ga = g.matmul(gy, b, false, true);
        else if (!ta && tb)
          ga = g.matmul(gy, b, false, false);
        else if (ta && !tb)
          ga = g.matmul(b, gy, false, true);
        else
          ga = g.matmul(b, gy, true, true);
        accumulate(a, ga);
      }
      if (wants(1)) {
        NodeId gb;
        if (!ta && !tb)
          gb = g.matmul(a, gy, true, false);
        else if (!ta && tb)
          gb = g.matmul(gy, a, true, false);
        else if (ta && !tb)
          gb = g.matmul(a, gy, false, false);
        else
          gb = g.matmul(gy, a, true, true);
        accumulate(b, gb);
      }
      break;
    }

    case Op::kTranspose:
      accumulate(in[0], g.transpose(gy));
      break;

    case Op::kAdd:
      if (wants(0))
        accumulate(in[0], gy);
      if (wants(1))
        accumulate(in[1], gy);
      break;

    case Op::kSub:
      if (wants(0))
        accumulate(in[0], gy);
      if (wants(1))
        accumulate(in[1], g.scale(gy, -1.0));
      break;

    case Op::kMul:
      if (wants(0))
        accumulate(in[0], g.mul(gy, in[1]));
      if (wants(1))
        accumulate(in[1], g.mul(gy, in[0]));
      break;

    case Op::kScale:
    case Op::kAffine:
      accumulate(in[0], g.scale(gy, node.a));
      break;

    case Op::kAddRow:
      if (wants(0))
        accumulate(in[0], gy);
      if (wants(1))
        accumulate(in[1], g.sum_rows(gy));
      break;

    case Op::kMulRow:
      if (wants(0))
        accumulate(in[0], g.mul_row(gy, in[1]));
      if (wants(1))
        accumulate(in[1], g.sum_rows(g.mul(gy, in[0])));
      break;

    case Op::kMulCol:
      if (wants(0))
        accumulate(in[0], g.mul_col(gy, in[1]));
      if (wants(1))
        accumulate(in[1], g.sum_cols(g.mul(gy, in[0])));
      break;

    case Op::kConcatCols: {
      std::size_t off = 0;
      for (std::size_t k = 0; k < in.size(); ++k) {
        const std::size_t w = g.cols(in[k]);
        if (wants(k))
          accumulate(in[k], g.slice_cols(gy, off, w));
        off += w;
      }
      break;
    }

    case Op::kSliceCols:
      accumulate(in[0], g.pad_cols(gy, node.offset, g.cols(in[0])));
      break;

    case Op::kPadCols:
      accumulate(in[0], g.slice_cols(gy, node.offset, g.cols(in[0])));
      break;

    case Op::kConcatRows: {
      std::size_t off = 0;
      for (std::size_t k = 0; k < in.size(); ++k) {
        const std::size_t r = g.rows(in[k]);
        if (wants(k))
          accumulate(in[k], g.slice_rows(gy, off, r));
        off += r;
      }
      break;
    }

    case Op::kSliceRows:
      accumulate(in[0], g.pad_rows(gy, node.offset, g.rows(in[0])));
      break;

    case Op::kPadRows:
      accumulate(in[0], g.slice_rows(gy, node.offset, g.rows(in[0])));
      break;

    case Op::kGather:
      accumulate(in[0], g.segment_sum(gy, node.index, g.rows(in[0])));
      break;

    case Op::kSegmentSum:
      accumulate(in[0], g.gather(gy, node.index));
      break;

    case Op::kSegmentMax:
      accumulate(in[0], g.segment_max_scatter(gy, in[0], node.index, node.rows));
      break;

    case Op::kSegmentMaxScatter:
      if (wants(0)) {
        accumulate(in[0],
                   g.segment_max_pick(gy, in[1], node.index, g.rows(in[0])));
      }
      break;

    case Op::kSegmentMaxPick:
      if (wants(0))
        accumulate(in[0], g.segment_max_scatter(gy, in[1], node.index, node.rows));
      break;

    case Op::kBroadcastRows:
      accumulate(in[0], g.sum_rows(gy));
      break;

    case Op::kSumRows:
      accumulate(in[0], g.broadcast_rows(gy, g.rows(in[0])));
      break;

    case Op::kBroadcastCols:
      accumulate(in[0], g.sum_cols(gy));
      break;

    case Op::kSumCols:
      accumulate(in[0], g.broadcast_cols(gy, g.cols(in[0])));
      break;

    case Op::kSumAll:
      accumulate(in[0], g.broadcast_scalar(gy, g.rows(in[0]), g.cols(in[0])));
      break;

    case Op::kBroadcastScalar:
      accumulate(in[0], g.sum_all(gy));
      break;

    case Op::kRelu:
      accumulate(in[0], g.mask_above(gy, in[0], 0.0));
      break;

    case Op::kMaskAbove:
      if (wants(0))
        accumulate(in[0], g.mask_above(gy, in[1], node.a));
      break;

    case Op::kSigmoid: {
      const NodeId s = id;
      accumulate(in[0], g.mul(gy, g.mul(s, g.affine(s, -1.0, 1.0))));
      break;
    }

    case Op::kExp:
      accumulate(in[0], g.mul(gy, id));
      break;

    case Op::kLog:
      accumulate(in[0], g.mul(gy, g.pow(in[0], -1.0)));
      break;

    case Op::kPow:
      if (node.a == 1.0)
        accumulate(in[0], gy);
      else if (node.a != 0.0)
        accumulate(in[0], g.mul(gy, g.scale(g.pow(in[0], node.a - 1.0), node.a)));
      break;

    case Op::kClampMin:
      accumulate(in[0], g.mask_above(gy, in[0], node.a));
      break;
    }
  }

  std::vector<NodeId> out;
  out.reserve(wrt.size());
  for (NodeId w: wrt) {
    if (w < n && adj[w]) {
      out.push_back(*adj[w]);
    } else {
      out.push_back(g.constant(Tensor(g.rows(w), g.cols(w))));
    }
  }
  return out;
}

double check_gradient(Graph &graph, NodeId output, NodeId leaf,
                      const Tensor &probe, double h) {
  if (h <= 0.0)
    throw DiffError(DiffErrc::kInvalidArgument, "step must be positive");
  const NodeId grad = gradient(graph, output, { leaf })[0];

  std::unordered_map<NodeId, const Tensor *> bind { { leaf, &probe } };
  const Tensor analytic = evaluate(graph, bind, { grad })[0];

  double worst = 0.0;
  Tensor x = probe;
  bind[leaf] = &x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double up = evaluate(graph, bind, { output })[0].item();
    x[i] = orig - h;
    const double down = evaluate(graph, bind, { output })[0].item();
    x[i] = orig;
    const double numeric = (up - down) / (2.0 * h);
    const double err =
        std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace molsearch::diff
