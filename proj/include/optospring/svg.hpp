#pragma once

#include <string>
#include <utility>
#include <vector>

namespace optospring {

struct SvgSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;  // (x, y)
};

/// Minimal self-contained line chart: auto-scaled axes with nice ticks, a
/// small legend, optional log-10 y axis (non-positive values are skipped).
/// NaN points break the polyline.
std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::string& y_label,
                           const std::vector<SvgSeries>& series, bool log_y = false);

/// Heat map over a rectangular grid of cell centers (values[i][j] belongs to
/// (xs[i], ys[j])) plus an optional overlay polyline. NaN cells render
/// gray. The color range auto-scales to the finite values and is recorded
/// in a comment at the top of the file.
std::string heat_map_svg(const std::string& title, const std::string& x_label,
                         const std::string& y_label, const std::vector<double>& xs,
                         const std::vector<double>& ys,
                         const std::vector<std::vector<double>>& values,
                         const std::vector<std::pair<double, double>>& overlay);

}  // namespace optospring
