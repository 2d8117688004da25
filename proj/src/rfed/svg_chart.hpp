#pragma once

#include <string>
#include <vector>

namespace rfed {

struct ChartSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = true;
  std::vector<ChartSeries> series;
};

/// Minimal standalone SVG line plot with axes, tick labels and a legend.
/// With log_y, non-positive values are dropped from the polyline.
std::string line_chart_svg(const ChartSpec& spec);

}  // namespace rfed
