#pragma once

// Minimal SVG line charts for force/frequency traces; no plotting dependency.

#include <string>
#include <utility>
#include <vector>

namespace resotact {

struct PlotSeries {
    std::string name;
    std::vector<std::pair<double, double>> points; // (x, y)
};

void write_line_plot_svg(const std::string& path, const std::string& title,
                         const std::string& x_label, const std::string& y_label,
                         const std::vector<PlotSeries>& series);

} // namespace resotact
