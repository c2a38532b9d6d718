#pragma once

#include <string>
#include <vector>

namespace boml {

// Minimal line-chart writer (polyline + axes); no plotting dependency.
struct SvgSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<SvgSeries>& series, double y_min = 0.0,
                      double y_max = 1.0);

}  // namespace boml
