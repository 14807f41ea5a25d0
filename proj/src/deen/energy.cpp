//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molsearch/deen/energy.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

#include "molsearch/diff/ops.h"

namespace molsearch::deen {

using diff::Graph;

std::vector<std::size_t> DeenConfig::scaled_hidden() const {
  std::vector<std::size_t> out;
  for (std::size_t w: hidden) {
    const double scaled = std::round(static_cast<double>(w) * width_scale);
    out.push_back(std::max<std::size_t>(1, static_cast<std::size_t>(scaled)));
  }
  return out;
}

EnergyNet EnergyNet::init(std::size_t input_width, const std::vector<std::size_t> &hidden,
                          Rng &rng) {
  if (input_width == 0 || hidden.empty())
    throw DeenError(DeenErrc::kInvalidArgument, "energy net needs input and hidden widths");
  EnergyNet net;
  net.input_width = input_width;
  std::size_t prev2 = 0, prev = input_width;
  for (std::size_t w: hidden) {
    net.hidden.push_back(diff::Linear::init(prev + prev2, w, rng));
    prev2 = prev;
    prev = w;
  }
  // With a single hidden layer, "the last two" are that layer and the input.
  net.out = diff::Linear::init(prev + prev2, 1, rng);
  return net;
}

diff::NamedTensors EnergyNet::parameters() {
  diff::NamedTensors out;
  for (std::size_t i = 0; i < hidden.size(); ++i)
    hidden[i].collect("hidden" + std::to_string(i), out);
  this->out.collect("out", out);
  return out;
}

NodeId energy_node(diff::ParamBinder &p, const EnergyNet &net, NodeId y) {
  Graph &g = p.graph();
  if (g.cols(y) != net.input_width)
    throw DeenError(DeenErrc::kShapeMismatch,
                    "energy input has " + std::to_string(g.cols(y)) + " columns, net expects "
                        + std::to_string(net.input_width));
  NodeId prev = y;
  if (!net.shift.values().empty()) {
    prev = g.mul_row(g.add_row(y, g.constant(net.shift)), g.constant(net.inv_scale));
  }
  std::optional<NodeId> prev2;
  for (const diff::Linear &layer: net.hidden) {
    const NodeId in = prev2 ? g.concat_cols({ prev, *prev2 }) : prev;
    const NodeId h = diff::silu(g, diff::apply_linear(p, layer, in));
    prev2 = prev;
    prev = h;
  }
  return diff::apply_linear(p, net.out, g.concat_cols({ prev, *prev2 }));
}

Tensor energies(const EnergyNet &net, const Tensor &y, std::size_t chunk) {
  if (y.cols() != net.input_width)
    throw DeenError(DeenErrc::kShapeMismatch, "energy input width");
  Tensor out(y.rows(), 1);
  chunk = std::max<std::size_t>(chunk, 1);
  for (std::size_t begin = 0; begin < y.rows(); begin += chunk) {
    const std::size_t n = std::min(chunk, y.rows() - begin);
    Tensor part(n, y.cols());
    std::copy_n(y.row_ptr(begin), n * y.cols(), part.data());
    Graph g;
    diff::ParamBinder p(g);
    const NodeId phi = energy_node(p, net, g.constant(std::move(part)));
    std::copy_n(g.value(phi).data(), n, out.row_ptr(begin));
  }
  return out;
}

double energy(const EnergyNet &net, const Tensor &y) {
  if (y.rows() != 1)
    throw DeenError(DeenErrc::kShapeMismatch, "energy() takes a single row");
  return energies(net, y)[0];
}

namespace {
// y - sigma^2 grad phi(y) as a node; y must be an input leaf.
NodeId estimate_node(Graph &g, NodeId phi_rows, NodeId y, double sigma) {
  const NodeId phi = g.sum_all(phi_rows);
  const NodeId grad = diff::gradient(g, phi, { y })[0];
  return g.sub(y, g.scale(grad, sigma * sigma));
}

void check_sigma(double sigma) {
  if (!(sigma >= 0) || !std::isfinite(sigma))
    throw DeenError(DeenErrc::kInvalidArgument, "sigma must be finite and non-negative");
}
}  // namespace

Tensor bayes_estimate(const EnergyNet &net, const Tensor &y, double sigma) {
  check_sigma(sigma);
  if (y.cols() != net.input_width)
    throw DeenError(DeenErrc::kShapeMismatch, "estimate input width");
  Graph g;
  diff::ParamBinder p(g);
  const NodeId leaf = g.input(y);
  return g.value(estimate_node(g, energy_node(p, net, leaf), leaf, sigma));
}

Tensor bayes_estimate(const EnergyFn &phi, const Tensor &y, double sigma) {
  check_sigma(sigma);
  Graph g;
  const NodeId leaf = g.input(y);
  const NodeId rows = phi(g, leaf);
  if (g.rows(rows) != y.rows() || g.cols(rows) != 1)
    throw DeenError(DeenErrc::kShapeMismatch, "energy must give one value per row");
  return g.value(estimate_node(g, rows, leaf, sigma));
}

NoisyPairs corrupt(const Tensor &latents, double sigma, std::size_t copies, Rng &rng) {
  check_sigma(sigma);
  if (copies == 0)
    throw DeenError(DeenErrc::kInvalidArgument, "need at least one noisy copy");
  const std::size_t n = latents.rows(), d = latents.cols();
  NoisyPairs out { Tensor(n * copies, d), Tensor(n * copies, d) };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < copies; ++j) {
      const std::size_t row = i * copies + j;
      std::copy_n(latents.row_ptr(i), d, out.clean.row_ptr(row));
      for (std::size_t c = 0; c < d; ++c)
        out.noisy(row, c) = latents(i, c) + (sigma == 0 ? 0.0 : rng.normal(0.0, sigma));
    }
  }
  return out;
}

NodeId deen_loss(diff::ParamBinder &p, const EnergyNet &net, const Tensor &clean,
                 const Tensor &noisy, double sigma) {
  check_sigma(sigma);
  if (!clean.same_shape(noisy) || clean.rows() == 0)
    throw DeenError(DeenErrc::kShapeMismatch, "clean and noisy batches differ");
  Graph &g = p.graph();
  const NodeId y = g.input(noisy);
  const NodeId x_hat = estimate_node(g, energy_node(p, net, y), y, sigma);
  const NodeId diff = g.sub(g.constant(clean), x_hat);
  return g.scale(g.sum_all(diff::square(g, diff)), 1.0 / static_cast<double>(clean.rows()));
}

double deen_loss_value(const EnergyNet &net, const Tensor &clean, const Tensor &noisy,
                       double sigma) {
  Graph g;
  diff::ParamBinder p(g);
  return g.value(deen_loss(p, net, clean, noisy, sigma)).item();
}

namespace {
Tensor rows_of(const Tensor &t, const std::vector<std::size_t> &rows) {
  Tensor out(rows.size(), t.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy_n(t.row_ptr(rows[i]), t.cols(), out.row_ptr(i));
  return out;
}

// Mean squared denoising error over a whole set, in chunks.
double set_loss(const EnergyNet &net, const Tensor &clean, const Tensor &noisy,
                double sigma, std::size_t chunk) {
  double total = 0;
  for (std::size_t begin = 0; begin < clean.rows(); begin += chunk) {
    std::vector<std::size_t> rows(std::min(chunk, clean.rows() - begin));
    std::iota(rows.begin(), rows.end(), begin);
    total += deen_loss_value(net, rows_of(clean, rows), rows_of(noisy, rows), sigma)
             * static_cast<double>(rows.size());
  }
  return total / static_cast<double>(clean.rows());
}
}  // namespace

DeenTrainResult train_deen(const Tensor &train, const Tensor &test,
                           const DeenConfig &config, std::uint64_t seed,
                           const DeenEpochCallback &on_epoch) {
  if (train.rows() == 0 || train.cols() == 0)
    throw DeenError(DeenErrc::kEmptyInput, "no training latents");
  if (test.rows() != 0 && test.cols() != train.cols())
    throw DeenError(DeenErrc::kShapeMismatch, "train and test widths differ");
  check_sigma(config.sigma);

  Rng init_rng(seed, "init", 1000);
  DeenTrainResult result;
  EnergyNet &net = result.net;
  net = EnergyNet::init(train.cols(), config.scaled_hidden(), init_rng);
  if (config.standardize) {
    const std::size_t d = train.cols();
    net.shift = Tensor(1, d);
    net.inv_scale = Tensor(1, d);
    const double n = static_cast<double>(train.rows());
    for (std::size_t c = 0; c < d; ++c) {
      double mean = 0, var = 0;
      for (std::size_t r = 0; r < train.rows(); ++r)
        mean += train(r, c);
      mean /= n;
      for (std::size_t r = 0; r < train.rows(); ++r)
        var += (train(r, c) - mean) * (train(r, c) - mean);
      const double sd = std::sqrt(var / n);
      net.shift[c] = -mean;
      net.inv_scale[c] = sd > 1e-12 ? 1.0 / sd : 1.0;
    }
  }

  diff::NamedTensors named = net.parameters();
  std::vector<Tensor *> params;
  for (auto &[name, t]: named)
    params.push_back(t);
  diff::Adam adam(params, diff::AdamConfig { .lr = config.lr });

  // Fixed noisy copy of the test set so that epochs are comparable.
  Rng test_noise(seed, "noise", 0);
  const NoisyPairs test_pairs = corrupt(test, config.sigma, 1, test_noise);

  std::vector<std::size_t> order(train.rows());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch = std::max<std::size_t>(config.batch_size, 1);
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng shuffle_rng(seed, "shuffle", 1000000 + epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
    Rng noise_rng(seed, "noise", epoch);

    double loss_sum = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
      const std::vector<std::size_t> rows(
          order.begin() + static_cast<std::ptrdiff_t>(begin),
          order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), begin + batch)));
      const NoisyPairs pairs = corrupt(rows_of(train, rows), config.sigma, 1, noise_rng);
      Graph g;
      diff::ParamBinder p(g);
      const NodeId loss = deen_loss(p, net, pairs.clean, pairs.noisy, config.sigma);
      loss_sum += g.value(loss).item() * static_cast<double>(rows.size());
      std::vector<NodeId> wrt;
      for (Tensor *t: params)
        wrt.push_back(p.leaf(*t));
      const std::vector<NodeId> ids = diff::gradient(g, loss, wrt);
      std::vector<const Tensor *> grads;
      for (NodeId id: ids)
        grads.push_back(&g.value(id));
      adam.step(grads);
    }

    DeenEpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(train.rows());
    entry.test_loss = test.rows() == 0
                          ? std::numeric_limits<double>::quiet_NaN()
                          : set_loss(net, test_pairs.clean, test_pairs.noisy, config.sigma, 512);
    result.log.push_back(entry);
    if (on_epoch)
      on_epoch(entry);
  }
  return result;
}

EnergyBounds bounds_from_energies(const std::vector<double> &energies) {
  if (energies.empty())
    throw DeenError(DeenErrc::kEmptyInput, "no reference energies");
  const auto [lo, hi] = std::minmax_element(energies.begin(), energies.end());
  if (!(*hi > *lo))
    throw DeenError(DeenErrc::kDegenerateRange, "reference energies span no range");
  return EnergyBounds { *lo, *hi, 1.0 / (*hi - *lo) };
}

EnergyBounds energy_bounds(const EnergyNet &net, const Tensor &reference) {
  if (reference.rows() == 0)
    throw DeenError(DeenErrc::kEmptyInput, "empty reference set");
  return bounds_from_energies(energies(net, reference).values());
}

}  // namespace molsearch::deen
