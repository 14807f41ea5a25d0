//
// molsearch - Copyright 2026 The molsearch Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace molsearch::pipeline {

struct HistogramBin {
  double left = 0;
  double right = 0;
  std::size_t count = 0;
};

// Equal-width bins over [lo, hi]; the last bin is closed. Values outside the
// range are not counted.
std::vector<HistogramBin> histogram(const std::vector<double> &values, double lo,
                                    double hi, std::size_t bins);

// Midpoint of the two central values for even sizes. NaN when empty.
double median(std::vector<double> values);

// Median of |v - center|.
double median_abs_deviation(const std::vector<double> &values, double center);

struct HistogramSeries {
  std::string name;
  std::vector<double> values;
};

// bin_left,bin_right,count,series over one shared binning of all series.
void write_energy_histograms(std::ostream &out, const std::vector<HistogramSeries> &series,
                             std::size_t bins);

// printf("%.17g"), with nan and inf spelled out.
std::string format_number(double v);

}  // namespace molsearch::pipeline
