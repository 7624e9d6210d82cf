// Copyright 2026 The colora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace colora {

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

/// Minimal self-contained SVG line plot with labeled axes, ticks and a
/// legend. CSV files remain the canonical output; this is a convenience view.
void write_line_plot(std::ostream& os, const std::string& title, const std::string& x_label,
                     const std::string& y_label, const std::vector<PlotSeries>& series);

}  // namespace colora
