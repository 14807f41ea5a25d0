//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <cmath>
#include <functional>
#include <string>

#include <gtest/gtest.h>

#include "molsearch/diff/graph.h"
#include "molsearch/diff/nn.h"
#include "molsearch/diff/ops.h"

namespace molsearch::diff {
namespace {
Tensor random_tensor(Rng &rng, std::size_t r, std::size_t c, double lo = -1.5,
                     double hi = 1.5) {
  Tensor t(r, c);
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = rng.uniform(lo, hi);
  return t;
}

// Reduces a node to a scalar through a fixed random weighting, so every
// output component contributes to the gradient.
NodeId weighted_sum(Graph &g, NodeId y, Rng &rng) {
  return g.sum_all(g.mul(y, g.constant(random_tensor(rng, g.rows(y), g.cols(y)))));
}

using Builder = std::function<NodeId(Graph &, NodeId, Rng &)>;

struct OpCase {
  std::string name;
  Builder build;
  bool positive = false;  // inputs drawn from (0.5, 2)
};

std::vector<OpCase> op_cases() {
  auto idx = [](std::vector<std::uint32_t> v) { return make_index(std::move(v)); };
  return {
    { "matmul", [](Graph &g, NodeId x, Rng &r) {
        return g.matmul(x, g.constant(random_tensor(r, g.cols(x), 3)));
      } },
    { "matmul_left", [](Graph &g, NodeId x, Rng &r) {
        return g.matmul(g.constant(random_tensor(r, 2, g.rows(x))), x);
      } },
    { "matmul_ta", [](Graph &g, NodeId x, Rng &r) {
        return g.matmul(x, g.constant(random_tensor(r, g.rows(x), 2)), true, false);
      } },
    { "matmul_tb", [](Graph &g, NodeId x, Rng &r) {
        return g.matmul(x, g.constant(random_tensor(r, 2, g.cols(x))), false, true);
      } },
    { "matmul_tt", [](Graph &g, NodeId x, Rng &r) {
        return g.matmul(x, g.constant(random_tensor(r, 2, g.rows(x))), true, true);
      } },
    { "matmul_self", [](Graph &g, NodeId x, Rng &) { return g.matmul(x, x, true, false); } },
    { "transpose", [](Graph &g, NodeId x, Rng &) { return g.transpose(x); } },
    { "add", [](Graph &g, NodeId x, Rng &) { return g.add(x, g.scale(x, 0.3)); } },
    { "sub", [](Graph &g, NodeId x, Rng &r) {
        return g.sub(g.constant(random_tensor(r, g.rows(x), g.cols(x))), x);
      } },
    { "mul", [](Graph &g, NodeId x, Rng &) { return g.mul(x, g.sigmoid(x)); } },
    { "affine", [](Graph &g, NodeId x, Rng &) { return g.affine(x, -1.7, 0.4); } },
    { "add_row", [](Graph &g, NodeId x, Rng &) {
        return g.add_row(x, g.slice_rows(x, 0, 1));
      } },
    { "mul_row", [](Graph &g, NodeId x, Rng &) {
        return g.mul_row(x, g.slice_rows(x, g.rows(x) - 1, 1));
      } },
    { "mul_col", [](Graph &g, NodeId x, Rng &) {
        return g.mul_col(x, g.slice_cols(x, 1, 1));
      } },
    { "concat_slice_cols", [](Graph &g, NodeId x, Rng &) {
        const NodeId c = g.concat_cols({ x, g.exp(x), x });
        return g.slice_cols(c, 1, g.cols(x) + 1);
      } },
    { "pad_cols", [](Graph &g, NodeId x, Rng &) { return g.pad_cols(x, 2, g.cols(x) + 3); } },
    { "concat_slice_rows", [](Graph &g, NodeId x, Rng &) {
        const NodeId c = g.concat_rows({ g.sigmoid(x), x });
        return g.slice_rows(c, 1, g.rows(x));
      } },
    { "pad_rows", [](Graph &g, NodeId x, Rng &) { return g.pad_rows(x, 1, g.rows(x) + 2); } },
    { "gather", [idx](Graph &g, NodeId x, Rng &) {
        return g.gather(x, idx({ 0, 2, 2, 1, 0, 3 }));
      } },
    { "segment_sum", [idx](Graph &g, NodeId x, Rng &) {
        return g.segment_sum(x, idx({ 1, 0, 1, 2 }), 4);
      } },
    { "segment_mean", [idx](Graph &g, NodeId x, Rng &) {
        return segment_mean(g, x, idx({ 1, 0, 1, 1 }), 3);
      } },
    { "segment_max", [idx](Graph &g, NodeId x, Rng &) {
        return g.segment_max(x, idx({ 1, 0, 1, 0 }), 3);
      } },
    { "segment_softmax", [idx](Graph &g, NodeId x, Rng &) {
        return segment_softmax(g, x, idx({ 0, 0, 1, 0 }), 2);
      } },
    { "broadcast_sum_rows", [](Graph &g, NodeId x, Rng &) {
        return g.broadcast_rows(g.sum_rows(g.mul(x, x)), 3);
      } },
    { "broadcast_sum_cols", [](Graph &g, NodeId x, Rng &) {
        return g.broadcast_cols(g.sum_cols(g.exp(x)), 2);
      } },
    { "broadcast_scalar", [](Graph &g, NodeId x, Rng &) {
        return g.broadcast_scalar(l2_norm(g, x), 2, 2);
      } },
    { "relu", [](Graph &g, NodeId x, Rng &) { return g.relu(x); } },
    { "sigmoid", [](Graph &g, NodeId x, Rng &) { return g.sigmoid(x); } },
    { "silu", [](Graph &g, NodeId x, Rng &) { return silu(g, x); } },
    { "exp", [](Graph &g, NodeId x, Rng &) { return g.exp(x); } },
    { "log", [](Graph &g, NodeId x, Rng &) { return g.log(x); }, true },
    { "pow", [](Graph &g, NodeId x, Rng &) { return g.pow(x, -0.5); }, true },
    { "pow3", [](Graph &g, NodeId x, Rng &) { return g.pow(x, 3.0); } },
    { "clamp_min", [](Graph &g, NodeId x, Rng &) { return g.clamp_min(x, 0.1); } },
    { "square_mean", [](Graph &g, NodeId x, Rng &) { return mean(g, square(g, x)); } },
    { "batchnorm", [](Graph &g, NodeId x, Rng &r) {
        return batchnorm_train(g, x, g.constant(random_tensor(r, 1, g.cols(x))),
                               g.constant(random_tensor(r, 1, g.cols(x))), 1e-5);
      } },
  };
}

TEST(DiffTest, Examples) {
  Graph g;
  const NodeId z = g.input(Tensor::scalar(0.0));
  const NodeId one = g.input(Tensor::scalar(1.0));
  EXPECT_EQ(g.value(silu(g, z)).item(), 0.0);
  EXPECT_NEAR(g.value(silu(g, one)).item(), 0.7310585786300049, 1e-15);

  const NodeId pts = g.input(Tensor::from_rows({ { 1, 1 }, { 3, 3 } }));
  const NodeId m = segment_mean(g, pts, make_index({ 0, 0 }), 1);
  EXPECT_EQ(g.value(m), Tensor::from_rows({ { 2, 2 } }));

  const NodeId a = g.input(Tensor(2, 3));
  const NodeId b = g.input(Tensor(4, 2));
  try {
    g.matmul(a, b);
    FAIL();
  } catch (const DiffError &e) {
    EXPECT_EQ(e.code(), DiffErrc::kShapeMismatch);
  }
}

TEST(DiffTest, FirstAndSecondDerivativeExamples) {
  Graph g;
  const NodeId x = g.input(Tensor::scalar(3.0));
  const NodeId dx = gradient(g, g.mul(x, x), { x })[0];
  EXPECT_DOUBLE_EQ(g.value(dx).item(), 6.0);

  Graph h;
  const NodeId y = h.input(Tensor::scalar(2.0));
  const NodeId cube = h.pow(y, 3.0);
  const NodeId d1 = gradient(h, cube, { y })[0];
  const NodeId d2 = gradient(h, d1, { y })[0];
  EXPECT_DOUBLE_EQ(h.value(d1).item(), 12.0);
  EXPECT_DOUBLE_EQ(h.value(d2).item(), 12.0);

  Graph q;
  const NodeId v = q.input(Tensor::row({ 4.0, 0.0 }));
  const NodeId half = q.scale(q.sum_all(square(q, v)), 0.5);
  EXPECT_EQ(q.value(gradient(q, half, { v })[0]), Tensor::row({ 4.0, 0.0 }));
}

TEST(DiffTest, GradientErrors) {
  Graph g;
  const NodeId x = g.input(Tensor(2, 2, 1.0));
  try {
    gradient(g, x, { x });
    FAIL();
  } catch (const DiffError &e) {
    EXPECT_EQ(e.code(), DiffErrc::kNonScalarOutput);
  }
  const NodeId mask = g.constant(Tensor(2, 2, 1.0));
  const NodeId s = g.sum_all(g.mul(x, mask));
  try {
    gradient(g, s, { mask });
    FAIL();
  } catch (const DiffError &e) {
    EXPECT_EQ(e.code(), DiffErrc::kNonDifferentiableOp);
  }
  const NodeId unused = g.input(Tensor(1, 3, 2.0));
  const NodeId gu = gradient(g, s, { unused })[0];
  EXPECT_EQ(g.value(gu), Tensor(1, 3, 0.0));

  Graph u;
  const NodeId p = u.placeholder(1, 2);
  const NodeId e = u.sum_all(p);
  EXPECT_FALSE(u.has_value(e));
  try {
    u.value(e);
    FAIL();
  } catch (const DiffError &err) {
    EXPECT_EQ(err.code(), DiffErrc::kUnboundLeaf);
  }
  try {
    evaluate(u, {}, { e });
    FAIL();
  } catch (const DiffError &err) {
    EXPECT_EQ(err.code(), DiffErrc::kUnboundLeaf);
  }
  const Tensor val = Tensor::row({ 1.0, 2.5 });
  EXPECT_EQ(evaluate(u, { { p, &val } }, { e })[0].item(), 3.5);
}

TEST(DiffTest, StopGradientBlocksThePath) {
  Graph g;
  const NodeId x = g.input(Tensor::row({ 0.5, -1.0 }));
  const NodeId y = g.sum_all(g.add(g.stop_gradient(g.exp(x)), x));
  EXPECT_EQ(g.value(gradient(g, y, { x })[0]), Tensor::row({ 1.0, 1.0 }));
}

TEST(DiffTest, ReluAtZeroHasZeroSubgradient) {
  Graph g;
  const NodeId x = g.input(Tensor::row({ 0.0, 1.0, -1.0 }));
  const NodeId d = gradient(g, g.sum_all(g.relu(x)), { x })[0];
  EXPECT_EQ(g.value(d), Tensor::row({ 0.0, 1.0, 0.0 }));
}

TEST(DiffTest, CheckGradientExamples) {
  Rng rng(5);
  Graph g;
  const Tensor a = random_tensor(rng, 4, 4);
  const NodeId x = g.input(random_tensor(rng, 4, 1));
  const NodeId quad = g.sum_all(g.mul(x, g.matmul(g.constant(a), x)));
  EXPECT_LT(check_gradient(g, quad, x, random_tensor(rng, 4, 1), 1e-5), 1e-7);

  Graph c;
  const NodeId y = c.input(Tensor(1, 3, 0.5));
  const NodeId k = c.sum_all(c.constant(Tensor(2, 2, 1.0)));
  const NodeId out = c.add(k, c.scale(c.sum_all(y), 0.0));
  EXPECT_EQ(check_gradient(c, out, y, Tensor(1, 3, 0.1), 1e-4), 0.0);
}

TEST(DiffTest, EveryOpMatchesFiniteDifferences) {
  for (const OpCase &op: op_cases()) {
    for (std::uint64_t trial = 0; trial < 5; ++trial) {
      Rng rng(100 + trial, op.name);
      const std::size_t r = 4, c = 2 + rng.index(3);
      const double lo = op.positive ? 0.5 : -1.5, hi = op.positive ? 2.0 : 1.5;
      Graph g;
      const NodeId x = g.input(random_tensor(rng, r, c, lo, hi));
      const NodeId y = op.build(g, x, rng);
      const NodeId s = weighted_sum(g, y, rng);
      const double err =
          check_gradient(g, s, x, random_tensor(rng, r, c, lo, hi), 1e-6);
      EXPECT_LT(err, 1e-4) << op.name << " trial " << trial;
    }
  }
}

TEST(DiffTest, SecondOrderOnSmoothOps) {
  const std::vector<std::string> smooth { "matmul", "matmul_ta", "matmul_tb",
                                          "matmul_tt", "matmul_self", "mul",
                                          "sigmoid", "silu", "exp", "log", "pow",
                                          "pow3", "square_mean", "broadcast_scalar",
                                          "segment_softmax", "batchnorm",
                                          "concat_slice_cols", "mul_row", "mul_col",
                                          "segment_mean", "broadcast_sum_cols" };
  for (const OpCase &op: op_cases()) {
    if (std::find(smooth.begin(), smooth.end(), op.name) == smooth.end())
      continue;
    for (std::uint64_t trial = 0; trial < 3; ++trial) {
      Rng rng(200 + trial, op.name);
      const std::size_t r = 4, c = 3;
      const double lo = op.positive ? 0.5 : -1.5, hi = op.positive ? 2.0 : 1.5;
      Graph g;
      const NodeId x = g.input(random_tensor(rng, r, c, lo, hi));
      const NodeId y = op.build(g, x, rng);
      // Non-linear outer function keeps the Hessian non-trivial for linear ops.
      const NodeId s = g.sum_all(silu(g, g.mul(y, g.constant(random_tensor(rng, g.rows(y), g.cols(y))))));
      const NodeId gx = gradient(g, s, { x })[0];
      const NodeId z = weighted_sum(g, gx, rng);
      const double err =
          check_gradient(g, z, x, random_tensor(rng, r, c, lo, hi), 1e-5);
      EXPECT_LT(err, 1e-3) << op.name << " trial " << trial;
    }
  }
}

TEST(DiffTest, SegmentSoftmaxSumsToOne) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t rows = 1 + rng.index(20), segments = 1 + rng.index(5);
    std::vector<std::uint32_t> seg(rows);
    for (auto &s: seg)
      s = static_cast<std::uint32_t>(rng.index(segments));
    Graph g;
    const NodeId x = g.input(random_tensor(rng, rows, 3, -30, 30));
    const NodeId sm = segment_softmax(g, x, make_index(seg), segments);
    const Tensor &v = g.value(sm);
    std::vector<std::array<double, 3>> sums(segments, { 0, 0, 0 });
    std::vector<bool> used(segments, false);
    for (std::size_t i = 0; i < rows; ++i) {
      used[seg[i]] = true;
      for (std::size_t j = 0; j < 3; ++j)
        sums[seg[i]][j] += v(i, j);
    }
    for (std::size_t s = 0; s < segments; ++s) {
      if (!used[s])
        continue;
      for (double total: sums[s])
        EXPECT_NEAR(total, 1.0, 1e-12);
    }
  }
}

TEST(DiffTest, EvaluateIsDeterministicAndMatchesEager) {
  Rng rng(11);
  Graph g;
  const NodeId x = g.input(random_tensor(rng, 5, 4));
  Rng drop(42, "dropout");
  const NodeId h = dropout(g, silu(g, g.matmul(x, g.constant(random_tensor(rng, 4, 6)))), 0.5, drop);
  const NodeId out = mean(g, square(g, h));
  const Tensor probe = random_tensor(rng, 5, 4);
  const auto a = evaluate(g, { { x, &probe } }, { out, h });
  const auto b = evaluate(g, { { x, &probe } }, { out, h });
  EXPECT_EQ(a[0], b[0]);
  EXPECT_EQ(a[1], b[1]);
  g.bind(x, &probe);
  EXPECT_EQ(g.value(out), a[0]);

  // Same dropout seed, same mask.
  Graph g2;
  const NodeId x2 = g2.input(Tensor(5, 6, 1.0));
  Rng d1(42, "dropout"), d2(42, "dropout");
  const NodeId m1 = dropout(g2, x2, 0.3, d1);
  const NodeId m2 = dropout(g2, x2, 0.3, d2);
  EXPECT_EQ(g2.value(m1), g2.value(m2));
}

TEST(DiffTest, BatchNormRunningStatistics) {
  Graph g;
  ParamBinder p(g);
  BatchNorm bn = BatchNorm::init(2);
  const NodeId x = g.input(Tensor::from_rows({ { 1, 10 }, { 3, 10 } }));
  BatchNormRecorder rec;
  const NodeId y = apply_batchnorm(p, bn, x, true, &rec);
  EXPECT_NEAR(g.value(y)(0, 0), -1.0 / std::sqrt(1.0 + 1e-5), 1e-12);
  EXPECT_EQ(g.value(y)(0, 1), 0.0);
  rec.apply(g);
  EXPECT_NEAR(bn.running_mean[0], 0.2, 1e-15);
  EXPECT_NEAR(bn.running_var[0], 0.9 + 0.1 * 2.0, 1e-15);
  EXPECT_NEAR(bn.running_var[1], 0.9, 1e-15);

  Graph e;
  ParamBinder pe(e);
  const NodeId xe = e.input(Tensor::from_rows({ { 0.2, 1.0 } }));
  const NodeId ye = apply_batchnorm(pe, bn, xe, false, nullptr);
  EXPECT_NEAR(e.value(ye)(0, 0), 0.0, 1e-15);
}

TEST(DiffTest, AdamMinimizesQuadratic) {
  Tensor w = Tensor::row({ 3.0, -2.0 });
  Adam opt({ &w }, AdamConfig { 0.1, 0.9, 0.999, 1e-8, 0.0 });
  for (int step = 0; step < 500; ++step) {
    Graph g;
    ParamBinder p(g);
    const NodeId loss = g.sum_all(square(g, p(w)));
    const NodeId gw = gradient(g, loss, { p.leaf(w) })[0];
    opt.step({ &g.value(gw) });
  }
  EXPECT_NEAR(w[0], 0.0, 1e-2);
  EXPECT_NEAR(w[1], 0.0, 1e-2);
  EXPECT_EQ(opt.steps(), 500);
}

}  // namespace
}  // namespace molsearch::diff
