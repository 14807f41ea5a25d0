//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molsearch/diff/nn.h"

#include <cmath>

namespace molsearch::diff {

Linear Linear::init(std::size_t in, std::size_t out, Rng &rng) {
  if (in == 0 || out == 0)
    throw DiffError(DiffErrc::kInvalidArgument, "linear layer with zero width");
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  Linear l { Tensor(in, out), Tensor(1, out) };
  for (std::size_t i = 0; i < l.weight.size(); ++i)
    l.weight[i] = rng.uniform(-bound, bound);
  for (std::size_t i = 0; i < l.bias.size(); ++i)
    l.bias[i] = rng.uniform(-bound, bound);
  return l;
}

void Linear::collect(const std::string &prefix, NamedTensors &out) {
  out.emplace_back(prefix + ".weight", &weight);
  out.emplace_back(prefix + ".bias", &bias);
}

BatchNorm BatchNorm::init(std::size_t width) {
  BatchNorm bn;
  bn.gamma = Tensor(1, width, 1.0);
  bn.beta = Tensor(1, width, 0.0);
  bn.running_mean = Tensor(1, width, 0.0);
  bn.running_var = Tensor(1, width, 1.0);
  return bn;
}

void BatchNorm::collect_params(const std::string &prefix, NamedTensors &out) {
  out.emplace_back(prefix + ".gamma", &gamma);
  out.emplace_back(prefix + ".beta", &beta);
}

void BatchNorm::collect_buffers(const std::string &prefix, NamedTensors &out) {
  out.emplace_back(prefix + ".running_mean", &running_mean);
  out.emplace_back(prefix + ".running_var", &running_var);
}

NodeId ParamBinder::operator()(const Tensor &param) {
  auto it = leaves_.find(&param);
  if (it != leaves_.end())
    return it->second;
  const NodeId id = g_.input_view(&param);
  leaves_.emplace(&param, id);
  return id;
}

void BatchNormRecorder::apply(const Graph &g) const {
  for (const Entry &e: entries_) {
    const Tensor &mu = g.value(e.stats.mean);
    const Tensor &var = g.value(e.stats.variance);
    const double mom = e.bn->momentum;
    const double unbias =
        e.batch > 1 ? static_cast<double>(e.batch) / (e.batch - 1.0) : 1.0;
    for (std::size_t j = 0; j < mu.size(); ++j) {
      e.bn->running_mean[j] = (1.0 - mom) * e.bn->running_mean[j] + mom * mu[j];
      e.bn->running_var[j] =
          (1.0 - mom) * e.bn->running_var[j] + mom * var[j] * unbias;
    }
  }
}

NodeId apply_linear(ParamBinder &p, const Linear &layer, NodeId x) {
  Graph &g = p.graph();
  return g.add_row(g.matmul(x, p(layer.weight)), p(layer.bias));
}

NodeId apply_batchnorm(ParamBinder &p, BatchNorm &bn, NodeId x, bool train,
                       BatchNormRecorder *recorder) {
  Graph &g = p.graph();
  if (!train) {
    return batchnorm_eval(g, x, p(bn.gamma), p(bn.beta), bn.running_mean,
                          bn.running_var, bn.eps);
  }
  BatchNormStats stats {};
  const NodeId y = batchnorm_train(g, x, p(bn.gamma), p(bn.beta), bn.eps, &stats);
  if (recorder != nullptr)
    recorder->add(&bn, stats, g.rows(x));
  return y;
}

Adam::Adam(std::vector<Tensor *> params, AdamConfig config)
    : params_(std::move(params)), cfg_(config) {
  for (const Tensor *p: params_) {
    m_.emplace_back(p->rows(), p->cols());
    v_.emplace_back(p->rows(), p->cols());
  }
}

void Adam::step(const std::vector<const Tensor *> &grads) {
  if (grads.size() != params_.size())
    throw DiffError(DiffErrc::kInvalidArgument, "gradient count mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor &p = *params_[k];
    const Tensor &gr = *grads[k];
    if (!p.same_shape(gr))
      throw DiffError(DiffErrc::kShapeMismatch, "gradient shape mismatch");
    Tensor &m = m_[k];
    Tensor &v = v_[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = gr[i] + cfg_.weight_decay * p[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
      p[i] -= cfg_.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.eps);
    }
  }
}

}  // namespace molsearch::diff
