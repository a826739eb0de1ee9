// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

// Minimal standalone SVG line charts.

#ifndef DYNFILT_SVG_H_
#define DYNFILT_SVG_H_

#include <string>
#include <vector>

namespace dynfilt {

struct ChartSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartLabels {
  std::string title;
  std::string x_axis;
  std::string y_axis;
};

// Axes span the data range of all series. Throws ContractError when a
// series has mismatched lengths or no points.
std::string LineChartSvg(const ChartLabels& labels, const std::vector<ChartSeries>& series);

}  // namespace dynfilt

#endif  // DYNFILT_SVG_H_
