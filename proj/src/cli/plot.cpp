#include "tactile/cli/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "tactile/error.hpp"

namespace tactile::cli {

namespace {

double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - static_cast<double>(lo));
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

BoxStats box_stats(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "box plot series is empty");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  BoxStats b;
  b.q1 = quantile(v, 0.25);
  b.median = quantile(v, 0.5);
  b.q3 = quantile(v, 0.75);
  const double iqr = b.q3 - b.q1;
  const double lo_fence = b.q1 - 1.5 * iqr;
  const double hi_fence = b.q3 + 1.5 * iqr;
  b.whisker_lo = b.q1;
  b.whisker_hi = b.q3;
  for (double x : v) {
    if (x < lo_fence || x > hi_fence) {
      b.outliers.push_back(x);
    } else {
      b.whisker_lo = std::min(b.whisker_lo, x);
      b.whisker_hi = std::max(b.whisker_hi, x);
    }
  }
  return b;
}

std::string box_plot_svg(const std::string& title, const std::string& y_label, const std::vector<BoxSeries>& series) {
  const double box_w = 36.0, gap = 28.0, left = 70.0, right = 20.0, top = 40.0, plot_h = 300.0, bottom = 110.0;
  const double width = left + right + std::max<std::size_t>(series.size(), 1) * (box_w + gap);
  const double height = top + plot_h + bottom;

  double lo = 0.0, hi = 1.0;
  bool first = true;
  for (const auto& s : series) {
    for (double v : s.values) {
      lo = first ? v : std::min(lo, v);
      hi = first ? v : std::max(hi, v);
      first = false;
    }
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  auto y = [&](double v) { return top + plot_h * (1.0 - (v - lo) / (hi - lo)); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << num(width / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
      << "</text>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h
      << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 5; ++t) {
    const double v = lo + (hi - lo) * t / 5.0;
    svg << "<line x1=\"" << left - 4 << "\" y1=\"" << num(y(v)) << "\" x2=\"" << left << "\" y2=\"" << num(y(v))
        << "\" stroke=\"black\"/>";
    svg << "<text x=\"" << left - 6 << "\" y=\"" << num(y(v) + 4) << "\" text-anchor=\"end\">" << num(v)
        << "</text>\n";
  }
  svg << "<text transform=\"translate(16," << num(top + plot_h / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(y_label) << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const double cx = left + gap / 2 + box_w / 2 + static_cast<double>(i) * (box_w + gap);
    if (!s.values.empty()) {
      const auto b = box_stats(s.values);
      svg << "<line x1=\"" << num(cx) << "\" y1=\"" << num(y(b.whisker_lo)) << "\" x2=\"" << num(cx) << "\" y2=\""
          << num(y(b.whisker_hi)) << "\" stroke=\"black\"/>\n";
      svg << "<rect x=\"" << num(cx - box_w / 2) << "\" y=\"" << num(y(b.q3)) << "\" width=\"" << num(box_w)
          << "\" height=\"" << num(std::max(0.5, y(b.q1) - y(b.q3))) << "\" fill=\"#9ecae1\" stroke=\"black\"/>\n";
      svg << "<line x1=\"" << num(cx - box_w / 2) << "\" y1=\"" << num(y(b.median)) << "\" x2=\"" << num(cx + box_w / 2)
          << "\" y2=\"" << num(y(b.median)) << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
      for (double o : b.outliers) {
        svg << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(y(o)) << "\" r=\"2.5\" fill=\"none\" stroke=\"black\"/>\n";
      }
    }
    svg << "<text transform=\"translate(" << num(cx + 4) << "," << num(top + plot_h + 12)
        << ") rotate(45)\" text-anchor=\"start\">" << escape(s.label) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace tactile::cli
