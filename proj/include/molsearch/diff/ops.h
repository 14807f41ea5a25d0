//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>

#include "molsearch/diff/graph.h"
#include "molsearch/rng.h"

namespace molsearch::diff {

// x * sigmoid(x)
NodeId silu(Graph &g, NodeId x);

NodeId square(Graph &g, NodeId x);

// Mean over all entries, as a 1 x 1 node.
NodeId mean(Graph &g, NodeId x);

// Euclidean norm over all entries, as a 1 x 1 node.
NodeId l2_norm(Graph &g, NodeId x);

// Row-wise mean per segment; empty segments give 0.
NodeId segment_mean(Graph &g, NodeId x, const Index &seg, std::size_t segments);

// Softmax over rows sharing a segment id, independently per column. The
// segment maximum is subtracted without a gradient path.
NodeId segment_softmax(Graph &g, NodeId x, const Index &seg,
                       std::size_t segments);

struct BatchNormStats {
  NodeId mean;      // 1 x c, batch mean
  NodeId variance;  // 1 x c, biased batch variance
};

// Training-mode batch normalization over rows with batch statistics.
// `stats`, if given, receives the statistics nodes.
NodeId batchnorm_train(Graph &g, NodeId x, NodeId gamma, NodeId beta,
                       double eps, BatchNormStats *stats = nullptr);

// Eval-mode batch normalization with fixed running statistics.
NodeId batchnorm_eval(Graph &g, NodeId x, NodeId gamma, NodeId beta,
                      const Tensor &running_mean, const Tensor &running_var,
                      double eps);

// Inverted dropout: zeroes each entry with probability p and rescales the
// rest by 1 / (1 - p). The mask is a constant, so no gradient flows into it.
NodeId dropout(Graph &g, NodeId x, double p, Rng &rng);

}  // namespace molsearch::diff
