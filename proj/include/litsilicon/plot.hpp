#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lit {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Axes {
  std::string title;
  std::string x_label;
  std::string y_label;
};

// Static SVG charts rendered from the same data written to CSV.
void write_line_svg(std::ostream& out, const Axes& axes, std::span<const Series> series);
// One group of bars per category, one bar per series.
void write_bar_svg(std::ostream& out, const Axes& axes, std::span<const std::string> categories,
                   std::span<const Series> series);
// NaN cells are drawn blank.
void write_heat_svg(std::ostream& out, const std::string& title,
                    std::span<const std::string> rows, std::span<const std::string> cols,
                    const Eigen::MatrixXd& values, double lo, double hi);

}  // namespace lit
