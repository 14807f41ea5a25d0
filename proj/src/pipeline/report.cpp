//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molsearch/pipeline/report.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "molsearch/pipeline/dataset.h"

namespace molsearch::pipeline {

std::vector<HistogramBin> histogram(const std::vector<double> &values, double lo,
                                    double hi, std::size_t bins) {
  if (bins == 0 || !(hi >= lo))
    throw PipelineError(PipelineErrc::kConfig, "histogram needs bins and lo <= hi");
  if (hi == lo)
    hi = lo + 1.0;  // a single value gets a unit-width range
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<HistogramBin> out(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].left = lo + width * static_cast<double>(b);
    out[b].right = b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1);
  }
  for (double v: values) {
    if (!(v >= lo && v <= hi))
      continue;
    auto b = static_cast<std::size_t>((v - lo) / width);
    b = std::min(b, bins - 1);
    // Guard the rounding of (v - lo) / width against the stored edges.
    while (b > 0 && v < out[b].left)
      --b;
    while (b + 1 < bins && v >= out[b + 1].left)
      ++b;
    ++out[b].count;
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty())
    return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double median_abs_deviation(const std::vector<double> &values, double center) {
  std::vector<double> dev;
  dev.reserve(values.size());
  for (double v: values)
    dev.push_back(std::abs(v - center));
  return median(std::move(dev));
}

void write_energy_histograms(std::ostream &out, const std::vector<HistogramSeries> &series,
                             std::size_t bins) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto &s: series) {
    for (double v: s.values) {
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  if (!std::isfinite(lo)) {
    lo = 0;
    hi = 1;
  }
  out << "bin_left,bin_right,count,series\n";
  for (const auto &s: series) {
    for (const HistogramBin &b: histogram(s.values, lo, hi, bins))
      out << format_number(b.left) << ',' << format_number(b.right) << ',' << b.count << ','
          << s.name << '\n';
  }
}

std::string format_number(double v) {
  if (std::isnan(v))
    return "nan";
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace molsearch::pipeline
