//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <span>

#include "molsearch/error.h"

namespace molsearch::pipeline {

enum class MetricErrc {
  kSizeMismatch,
  kSingleClass,  // no positives or no negatives
};

using MetricError = CodedError<MetricErrc>;

// Area under the ROC curve via the Mann-Whitney statistic with midranks,
// so a tied positive/negative pair counts 1/2. Labels are 0 or 1.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

}  // namespace molsearch::pipeline
