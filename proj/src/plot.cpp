#include "litsilicon/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace lit {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

const char* color(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '&':
        out += "&amp;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void settle() {
    if (!std::isfinite(lo)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12) {
      const double pad = std::abs(lo) > 0 ? std::abs(lo) * 0.05 : 1.0;
      lo -= pad;
      hi += pad;
    }
  }
};

void open_svg(std::ostream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(title) << "</text>\n";
}

void frame(std::ostream& out, const Axes& axes, const Range& y) {
  const double w = kWidth - kLeft - kRight;
  const double h = kHeight - kTop - kBottom;
  out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << w << "\" height=\"" << h
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = y.lo + (y.hi - y.lo) * i / 4.0;
    const double py = kTop + h - h * i / 4.0;
    out << "<text x=\"" << kLeft - 6 << "\" y=\"" << py + 4 << "\" text-anchor=\"end\">"
        << num(v) << "</text>\n";
  }
  out << "<text x=\"" << kLeft + w / 2 << "\" y=\"" << kHeight - 10
      << "\" text-anchor=\"middle\">" << escape(axes.x_label) << "</text>\n"
      << "<text x=\"16\" y=\"" << kTop + h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << kTop + h / 2 << ")\">" << escape(axes.y_label) << "</text>\n";
}

void legend(std::ostream& out, std::span<const Series> series) {
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double y = kTop + 14.0 * static_cast<double>(i);
    out << "<rect x=\"" << kWidth - kRight + 10 << "\" y=\"" << y << "\" width=\"10\" height=\"10\" fill=\""
        << color(i) << "\"/>\n<text x=\"" << kWidth - kRight + 24 << "\" y=\"" << y + 9 << "\">"
        << escape(series[i].label) << "</text>\n";
  }
}

}  // namespace

void write_line_svg(std::ostream& out, const Axes& axes, std::span<const Series> series) {
  Range x;
  Range y;
  for (const auto& s : series) {
    for (double v : s.x) x.add(v);
    for (double v : s.y) y.add(v);
  }
  x.settle();
  y.settle();
  const double w = kWidth - kLeft - kRight;
  const double h = kHeight - kTop - kBottom;
  open_svg(out, axes.title);
  frame(out, axes, y);
  out << "<text x=\"" << kLeft << "\" y=\"" << kTop + h + 16 << "\">" << num(x.lo) << "</text>\n"
      << "<text x=\"" << kLeft + w << "\" y=\"" << kTop + h + 16 << "\" text-anchor=\"end\">"
      << num(x.hi) << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    out << "<polyline fill=\"none\" stroke-width=\"1.2\" stroke=\"" << color(i) << "\" points=\"";
    const std::size_t n = std::min(s.x.size(), s.y.size());
    for (std::size_t k = 0; k < n; ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
      const double px = kLeft + w * (s.x[k] - x.lo) / (x.hi - x.lo);
      const double py = kTop + h - h * (s.y[k] - y.lo) / (y.hi - y.lo);
      out << num(px) << ',' << num(py) << ' ';
    }
    out << "\"/>\n";
  }
  legend(out, series);
  out << "</svg>\n";
}

void write_bar_svg(std::ostream& out, const Axes& axes, std::span<const std::string> categories,
                   std::span<const Series> series) {
  Range y;
  y.add(0.0);
  for (const auto& s : series) {
    for (double v : s.y) y.add(v);
  }
  y.settle();
  const double w = kWidth - kLeft - kRight;
  const double h = kHeight - kTop - kBottom;
  open_svg(out, axes.title);
  frame(out, axes, y);
  const double group = w / static_cast<double>(std::max<std::size_t>(categories.size(), 1));
  const double bar = group * 0.8 / static_cast<double>(std::max<std::size_t>(series.size(), 1));
  const double zero = kTop + h - h * (0.0 - y.lo) / (y.hi - y.lo);
  for (std::size_t c = 0; c < categories.size(); ++c) {
    const double gx = kLeft + group * static_cast<double>(c);
    out << "<text x=\"" << gx + group / 2 << "\" y=\"" << kTop + h + 16
        << "\" text-anchor=\"middle\">" << escape(categories[c]) << "</text>\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
      if (c >= series[i].y.size() || !std::isfinite(series[i].y[c])) continue;
      const double py = kTop + h - h * (series[i].y[c] - y.lo) / (y.hi - y.lo);
      out << "<rect x=\"" << num(gx + group * 0.1 + bar * static_cast<double>(i)) << "\" y=\""
          << num(std::min(py, zero)) << "\" width=\"" << num(bar) << "\" height=\""
          << num(std::abs(zero - py)) << "\" fill=\"" << color(i) << "\"/>\n";
    }
  }
  legend(out, series);
  out << "</svg>\n";
}

void write_heat_svg(std::ostream& out, const std::string& title,
                    std::span<const std::string> rows, std::span<const std::string> cols,
                    const Eigen::MatrixXd& values, double lo, double hi) {
  const double w = kWidth - kLeft - kRight;
  const double h = kHeight - kTop - kBottom;
  const double cw = w / static_cast<double>(std::max<Eigen::Index>(values.cols(), 1));
  const double ch = h / static_cast<double>(std::max<Eigen::Index>(values.rows(), 1));
  open_svg(out, title);
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    const double py = kTop + ch * static_cast<double>(r);
    if (static_cast<std::size_t>(r) < rows.size()) {
      out << "<text x=\"" << kLeft - 6 << "\" y=\"" << py + ch / 2 + 4 << "\" text-anchor=\"end\">"
          << escape(rows[static_cast<std::size_t>(r)]) << "</text>\n";
    }
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      const double v = values(r, c);
      if (!std::isfinite(v)) continue;
      const double t = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
      const int red = static_cast<int>(255 * t);
      const int blue = static_cast<int>(255 * (1 - t));
      out << "<rect x=\"" << num(kLeft + cw * static_cast<double>(c)) << "\" y=\"" << num(py)
          << "\" width=\"" << num(cw) << "\" height=\"" << num(ch) << "\" fill=\"rgb(" << red
          << ",80," << blue << ")\"/>\n";
    }
  }
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const double px = kLeft + cw * (static_cast<double>(c) + 0.5);
    out << "<text x=\"" << num(px) << "\" y=\"" << kTop + h + 14 << "\" text-anchor=\"end\" transform=\"rotate(-45 "
        << num(px) << ' ' << kTop + h + 14 << ")\" font-size=\"8\">" << escape(cols[c])
        << "</text>\n";
  }
  out << "<text x=\"" << kWidth - kRight + 10 << "\" y=\"" << kTop + 10 << "\">" << num(lo)
      << " (blue) .. " << num(hi) << " (red)</text>\n</svg>\n";
}

}  // namespace lit
