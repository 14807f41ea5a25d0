//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "molsearch/diff/nn.h"
#include "molsearch/error.h"
#include "molsearch/rng.h"

namespace molsearch::deen {

using diff::NodeId;
using diff::Tensor;

enum class DeenErrc {
  kShapeMismatch,
  kEmptyInput,
  kDegenerateRange,
  kInvalidArgument,
};

using DeenError = CodedError<DeenErrc>;

struct DeenConfig {
  std::vector<std::size_t> hidden { 3072, 2048, 1024 };
  // Multiplies every hidden width (rounded, at least 1).
  double width_scale = 1.0;
  double sigma = 0.25;
  double lr = 1e-5;
  std::size_t batch_size = 128;
  std::size_t epochs = 200;
  // Per-dimension standardization of the input, fitted on the training set.
  bool standardize = false;

  std::vector<std::size_t> scaled_hidden() const;
};

// Hidden layer i sees concat(h_{i-1}, h_{i-2}) with h_0 the input (the first
// hidden layer sees only the input), all with SiLU. The linear output layer
// sees the last two hidden outputs.
struct EnergyNet {
  std::size_t input_width = 0;
  std::vector<diff::Linear> hidden;
  diff::Linear out;
  // 1 x d; empty when standardization is off.
  Tensor shift, inv_scale;

  static EnergyNet init(std::size_t input_width, const std::vector<std::size_t> &hidden,
                        Rng &rng);

  diff::NamedTensors parameters();
};

// B x 1 energies of the rows of y (B x d).
NodeId energy_node(diff::ParamBinder &p, const EnergyNet &net, NodeId y);

double energy(const EnergyNet &net, const Tensor &y);  // y is 1 x d
Tensor energies(const EnergyNet &net, const Tensor &y, std::size_t chunk = 512);

// Energies of the rows of y as a B x 1 node.
using EnergyFn = std::function<NodeId(diff::Graph &, NodeId y)>;

// x_hat = y - sigma^2 grad phi(y), row by row.
Tensor bayes_estimate(const EnergyNet &net, const Tensor &y, double sigma);
Tensor bayes_estimate(const EnergyFn &phi, const Tensor &y, double sigma);

struct NoisyPairs {
  Tensor clean;  // (n m) x d, row i m + j is X_i
  Tensor noisy;  // X_i + eps_ij
};

NoisyPairs corrupt(const Tensor &latents, double sigma, std::size_t copies, Rng &rng);

// Mean over rows of |x - x_hat(y)|^2, built so that its parameter gradient
// runs through grad_y phi.
NodeId deen_loss(diff::ParamBinder &p, const EnergyNet &net, const Tensor &clean,
                 const Tensor &noisy, double sigma);

double deen_loss_value(const EnergyNet &net, const Tensor &clean, const Tensor &noisy,
                       double sigma);

struct DeenEpochLog {
  std::size_t epoch = 0;
  double train_loss = 0;
  double test_loss = 0;  // NaN without a test set

  bool operator==(const DeenEpochLog &) const = default;
};

struct DeenTrainResult {
  EnergyNet net;
  std::vector<DeenEpochLog> log;
};

using DeenEpochCallback = std::function<void(const DeenEpochLog &)>;

// One fresh noisy copy per sample and epoch. Keeps the final epoch's net.
DeenTrainResult train_deen(const Tensor &train, const Tensor &test,
                           const DeenConfig &config, std::uint64_t seed,
                           const DeenEpochCallback &on_epoch = {});

struct EnergyBounds {
  double phi_min = 0;
  double phi_max = 0;
  double beta0 = 0;  // 1 / (phi_max - phi_min)
};

EnergyBounds bounds_from_energies(const std::vector<double> &energies);
EnergyBounds energy_bounds(const EnergyNet &net, const Tensor &reference);

}  // namespace molsearch::deen
