// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "xreid/svg.hpp"

namespace xreid {

namespace {

constexpr double kW = 640.0, kH = 480.0;
constexpr double kL = 70.0, kR = 20.0, kT = 40.0, kB = 50.0;

const char* kPalette[] = {"#1f6fb2", "#d1495b", "#3a9d23", "#8a4fbf", "#e08a00", "#00848f"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&')
      out += "&amp;";
    else if (c == '<')
      out += "&lt;";
    else if (c == '>')
      out += "&gt;";
    else
      out += c;
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// tick label with just enough precision to distinguish neighbours
std::string tick_label(double v, double span) {
  char buf[32];
  int digits = span >= 5.0 ? 0 : (span >= 0.5 ? 1 : 2);
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

void write_line_plot_svg(std::ostream& os, const std::string& title, const std::string& x_label,
                         const std::string& y_label, const std::vector<SvgSeries>& series,
                         const MetaInfo* meta) {
  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_min = x_min, y_max = -x_min;
  for (const SvgSeries& s : series) {
    require(s.x.size() == s.y.size(), Err::ShapeMismatch, "svg series length mismatch");
    for (double v : s.x) {
      x_min = std::min(x_min, v);
      x_max = std::max(x_max, v);
    }
    for (double v : s.y) {
      y_min = std::min(y_min, v);
      y_max = std::max(y_max, v);
    }
  }
  if (!std::isfinite(x_min)) {
    x_min = 0.0;
    x_max = 1.0;
    y_min = 0.0;
    y_max = 1.0;
  }
  if (x_max <= x_min) x_max = x_min + 1.0;
  if (y_max <= y_min) y_max = y_min + 1.0;

  auto px = [&](double x) { return kL + (x - x_min) / (x_max - x_min) * (kW - kL - kR); };
  auto py = [&](double y) { return kH - kB - (y - y_min) / (y_max - y_min) * (kH - kT - kB); };

  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  if (meta != nullptr) {
    std::ostringstream m;
    write_meta(m, *meta, "  ");
    os << "<!--\n" << m.str() << "-->\n";
  }
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
     << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n";
  os << "<rect width=\"" << kW << "\" height=\"" << kH << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" "
        "font-family=\"sans-serif\">"
     << escape(title) << "</text>\n";

  // axes with 5 ticks per side
  os << "<line x1=\"" << kL << "\" y1=\"" << kH - kB << "\" x2=\"" << kW - kR << "\" y2=\""
     << kH - kB << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << kL << "\" y1=\"" << kT << "\" x2=\"" << kL << "\" y2=\"" << kH - kB
     << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    double xv = x_min + (x_max - x_min) * i / 5.0;
    double yv = y_min + (y_max - y_min) * i / 5.0;
    os << "<line x1=\"" << num(px(xv)) << "\" y1=\"" << kH - kB << "\" x2=\"" << num(px(xv))
       << "\" y2=\"" << kH - kB + 5 << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << num(px(xv)) << "\" y=\"" << kH - kB + 20
       << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">"
       << tick_label(xv, x_max - x_min) << "</text>\n";
    os << "<line x1=\"" << kL - 5 << "\" y1=\"" << num(py(yv)) << "\" x2=\"" << kL << "\" y2=\""
       << num(py(yv)) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << kL - 8 << "\" y=\"" << num(py(yv) + 4)
       << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">"
       << tick_label(yv, y_max - y_min) << "</text>\n";
  }
  os << "<text x=\"" << (kL + kW - kR) / 2 << "\" y=\"" << kH - 12
     << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">"
     << escape(x_label) << "</text>\n";
  os << "<text x=\"16\" y=\"" << (kT + kH - kB) / 2
     << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" transform=\"rotate(-90 16 "
     << (kT + kH - kB) / 2 << ")\">" << escape(y_label) << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const SvgSeries& s = series[si];
    const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      os << (i ? " " : "") << num(px(s.x[i])) << "," << num(py(s.y[i]));
    os << "\"/>\n";
    double ly = kT + 16.0 * static_cast<double>(si);
    os << "<line x1=\"" << kW - kR - 130 << "\" y1=\"" << num(ly) << "\" x2=\"" << kW - kR - 110
       << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"1.8\"/>\n";
    os << "<text x=\"" << kW - kR - 104 << "\" y=\"" << num(ly + 4)
       << "\" font-size=\"11\" font-family=\"sans-serif\">" << escape(s.label) << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace xreid
