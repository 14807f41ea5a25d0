//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molsearch/diff/ops.h"

#include <cmath>

namespace molsearch::diff {

NodeId silu(Graph &g, NodeId x) { return g.mul(x, g.sigmoid(x)); }

NodeId square(Graph &g, NodeId x) { return g.mul(x, x); }

NodeId mean(Graph &g, NodeId x) {
  const double n = static_cast<double>(g.rows(x) * g.cols(x));
  if (n == 0.0)
    throw DiffError(DiffErrc::kShapeMismatch, "mean of an empty tensor");
  return g.scale(g.sum_all(x), 1.0 / n);
}

NodeId l2_norm(Graph &g, NodeId x) {
  return g.pow(g.sum_all(square(g, x)), 0.5);
}

NodeId segment_mean(Graph &g, NodeId x, const Index &seg, std::size_t segments) {
  std::vector<double> count(segments, 0.0);
  for (std::uint32_t s: *seg) {
    if (s < segments)
      count[s] += 1.0;
  }
  Tensor inv(segments, 1);
  for (std::size_t s = 0; s < segments; ++s)
    inv[s] = count[s] > 0.0 ? 1.0 / count[s] : 0.0;
  const NodeId sum = g.segment_sum(x, seg, segments);
  return g.mul_col(sum, g.constant(std::move(inv)));
}

NodeId segment_softmax(Graph &g, NodeId x, const Index &seg,
                       std::size_t segments) {
  const NodeId peak = g.stop_gradient(g.segment_max(x, seg, segments));
  const NodeId shifted = g.sub(x, g.gather(peak, seg));
  const NodeId e = g.exp(shifted);
  const NodeId denom = g.gather(g.segment_sum(e, seg, segments), seg);
  return g.mul(e, g.pow(denom, -1.0));
}

NodeId batchnorm_train(Graph &g, NodeId x, NodeId gamma, NodeId beta,
                       double eps, BatchNormStats *stats) {
  const std::size_t m = g.rows(x);
  if (m == 0)
    throw DiffError(DiffErrc::kShapeMismatch, "batchnorm of an empty batch");
  const double inv_m = 1.0 / static_cast<double>(m);
  const NodeId mu = g.scale(g.sum_rows(x), inv_m);
  const NodeId centered = g.sub(x, g.broadcast_rows(mu, m));
  const NodeId var = g.scale(g.sum_rows(square(g, centered)), inv_m);
  const NodeId inv_std = g.pow(g.affine(var, 1.0, eps), -0.5);
  const NodeId normed = g.mul_row(centered, g.mul(inv_std, gamma));
  if (stats != nullptr)
    *stats = BatchNormStats { mu, var };
  return g.add_row(normed, beta);
}

NodeId batchnorm_eval(Graph &g, NodeId x, NodeId gamma, NodeId beta,
                      const Tensor &running_mean, const Tensor &running_var,
                      double eps) {
  const std::size_t c = g.cols(x);
  if (running_mean.size() != c || running_var.size() != c)
    throw DiffError(DiffErrc::kShapeMismatch, "running statistics width");
  Tensor shift(1, c), inv_std(1, c);
  for (std::size_t j = 0; j < c; ++j) {
    shift[j] = -running_mean[j];
    inv_std[j] = 1.0 / std::sqrt(running_var[j] + eps);
  }
  const NodeId centered = g.add_row(x, g.constant(std::move(shift)));
  const NodeId scale = g.mul(g.constant(std::move(inv_std)), gamma);
  return g.add_row(g.mul_row(centered, scale), beta);
}

NodeId dropout(Graph &g, NodeId x, double p, Rng &rng) {
  if (p < 0.0 || p >= 1.0)
    throw DiffError(DiffErrc::kInvalidArgument, "dropout rate must be in [0, 1)");
  if (p == 0.0)
    return x;
  Tensor mask(g.rows(x), g.cols(x));
  const double keep = 1.0 / (1.0 - p);
  for (std::size_t i = 0; i < mask.size(); ++i)
    mask[i] = rng.bernoulli(p) ? 0.0 : keep;
  return g.mul(x, g.constant(std::move(mask)));
}

}  // namespace molsearch::diff
