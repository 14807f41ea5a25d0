//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molsearch/pipeline/baseline.h"

#include <cmath>

#include "molsearch/pipeline/dataset.h"

namespace molsearch::pipeline {
namespace {
double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

// Solves the symmetric positive definite system a * x = b in place
// (Cholesky). The Hessian is regularized, so it is always definite.
std::vector<double> solve_spd(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j][j];
    for (std::size_t k = 0; k < j; ++k)
      d -= a[j][k] * a[j][k];
    a[j][j] = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i][j];
      for (std::size_t k = 0; k < j; ++k)
        s -= a[i][k] * a[j][k];
      a[i][j] = s / a[j][j];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k)
      b[i] -= a[i][k] * b[k];
    b[i] /= a[i][i];
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t k = i + 1; k < n; ++k)
      b[i] -= a[k][i] * b[k];
    b[i] /= a[i][i];
  }
  return b;
}
}  // namespace

double LogisticModel::operator()(std::span<const double> x) const {
  double z = bias;
  for (std::size_t j = 0; j < weights.size(); ++j)
    z += weights[j] * x[j];
  return sigmoid(z);
}

LogisticModel fit_logistic(const std::vector<std::vector<double>> &x,
                           const std::vector<int> &y, double l2,
                           std::size_t iterations) {
  if (x.empty() || x.size() != y.size())
    throw PipelineError(PipelineErrc::kConfig, "logistic fit needs matching, non-empty data");
  const std::size_t d = x[0].size();
  for (const auto &row: x) {
    if (row.size() != d)
      throw PipelineError(PipelineErrc::kConfig, "ragged logistic design matrix");
  }

  // Parameter vector theta = (weights, bias); the bias is not penalized.
  const std::size_t p = d + 1;
  std::vector<double> theta(p, 0.0);
  for (std::size_t it = 0; it < iterations; ++it) {
    std::vector<double> grad(p, 0.0);
    std::vector<std::vector<double>> hess(p, std::vector<double>(p, 0.0));
    for (std::size_t r = 0; r < x.size(); ++r) {
      double z = theta[d];
      for (std::size_t j = 0; j < d; ++j)
        z += theta[j] * x[r][j];
      const double mu = sigmoid(z);
      const double w = mu * (1.0 - mu);
      auto feature = [&](std::size_t j) { return j < d ? x[r][j] : 1.0; };
      for (std::size_t i = 0; i < p; ++i) {
        grad[i] += (mu - y[r]) * feature(i);
        for (std::size_t j = 0; j <= i; ++j)
          hess[i][j] += w * feature(i) * feature(j);
      }
    }
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < i; ++j)
        hess[j][i] = hess[i][j];
    }
    for (std::size_t j = 0; j < d; ++j) {
      grad[j] += l2 * theta[j];
      hess[j][j] += l2;
    }
    hess[d][d] += 1e-9;  // keeps a constant column from breaking the solve
    const std::vector<double> step = solve_spd(hess, grad);
    double change = 0;
    for (std::size_t i = 0; i < p; ++i) {
      theta[i] -= step[i];
      change = std::max(change, std::abs(step[i]));
    }
    if (change < 1e-10)
      break;
  }
  LogisticModel m;
  m.weights.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(d));
  m.bias = theta[d];
  return m;
}

std::vector<double> rule_features(const Rule &rule, const chem::Molecule &mol) {
  const std::vector<int> c = rule.comparisons(mol);
  return std::vector<double>(c.begin(), c.end());
}

}  // namespace molsearch::pipeline
