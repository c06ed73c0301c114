#pragma once

#include <span>
#include <string>
#include <vector>

namespace tactile::cli {

struct BoxStats {
  double q1 = 0.0, median = 0.0, q3 = 0.0;
  double whisker_lo = 0.0, whisker_hi = 0.0;  ///< furthest points within 1.5 IQR of the box
  std::vector<double> outliers;               ///< drawn only; never removed from any computation
};

/// Quartiles by linear interpolation between order statistics.
BoxStats box_stats(std::span<const double> values);

struct BoxSeries {
  std::string label;
  std::vector<double> values;
};

/// Standalone SVG box plot, one box per series, y axis in the values' units.
std::string box_plot_svg(const std::string& title, const std::string& y_label, const std::vector<BoxSeries>& series);

}  // namespace tactile::cli
