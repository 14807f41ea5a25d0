//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "molsearch/diff/graph.h"
#include "molsearch/diff/ops.h"
#include "molsearch/rng.h"

namespace molsearch::diff {

using NamedTensors = std::vector<std::pair<std::string, Tensor *>>;

struct Linear {
  Tensor weight;  // in x out
  Tensor bias;    // 1 x out

  // Kaiming-style uniform fan-in initialization: U(-1/sqrt(in), 1/sqrt(in))
  // for weights and biases.
  static Linear init(std::size_t in, std::size_t out, Rng &rng);

  std::size_t in() const { return weight.rows(); }
  std::size_t out() const { return weight.cols(); }
  void collect(const std::string &prefix, NamedTensors &out);
};

struct BatchNorm {
  Tensor gamma;
  Tensor beta;
  Tensor running_mean;
  Tensor running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  static BatchNorm init(std::size_t width);

  void collect_params(const std::string &prefix, NamedTensors &out);
  void collect_buffers(const std::string &prefix, NamedTensors &out);
};

// Binds parameter tensors as view leaves of a graph, once per tensor.
class ParamBinder {
public:
  explicit ParamBinder(Graph &g): g_(g) { }

  NodeId operator()(const Tensor &param);

  Graph &graph() { return g_; }
  // Leaf of a bound parameter.
  NodeId leaf(const Tensor &param) const { return leaves_.at(&param); }
  bool bound(const Tensor &param) const { return leaves_.count(&param) != 0; }

private:
  Graph &g_;
  std::unordered_map<const Tensor *, NodeId> leaves_;
};

// Batch statistics produced by training-mode batch norms of one step, to be
// folded into the running averages once the step is accepted.
class BatchNormRecorder {
public:
  void add(BatchNorm *bn, BatchNormStats stats, std::size_t batch) {
    entries_.push_back({ bn, stats, batch });
  }

  // running = (1 - momentum) * running + momentum * batch, with the
  // unbiased batch variance.
  void apply(const Graph &g) const;

private:
  struct Entry {
    BatchNorm *bn;
    BatchNormStats stats;
    std::size_t batch;
  };
  std::vector<Entry> entries_;
};

NodeId apply_linear(ParamBinder &p, const Linear &layer, NodeId x);

// Train mode uses batch statistics (recorded if `recorder` is non-null);
// eval mode the running ones.
NodeId apply_batchnorm(ParamBinder &p, BatchNorm &bn, NodeId x, bool train,
                       BatchNormRecorder *recorder);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // L2 penalty added to the gradient.
  double weight_decay = 0.0;
};

class Adam {
public:
  Adam(std::vector<Tensor *> params, AdamConfig config);

  // grads[i] is the gradient for params[i].
  void step(const std::vector<const Tensor *> &grads);

  std::size_t steps() const { return t_; }

private:
  std::vector<Tensor *> params_;
  AdamConfig cfg_;
  std::vector<Tensor> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace molsearch::diff
