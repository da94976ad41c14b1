#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace cgcn {

/// One polyline of a chart.
struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

namespace detail {

inline std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

}  // namespace detail

/// Minimal self-contained SVG line chart: axes, ticks, one polyline per
/// series, and a legend. Output is deterministic (fixed float formatting).
inline std::string line_chart_svg(const std::string& title, const std::string& x_label,
                                  const std::string& y_label, const std::vector<SvgSeries>& series,
                                  int width = 640, int height = 440) {
  const double ml = 62, mr = 150, mt = 40, mb = 50;
  const double pw = width - ml - mr, ph = height - mt - mb;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool any = false;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!any) {
        xmin = xmax = s.x[i];
        ymin = ymax = s.y[i];
        any = true;
      }
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (xmax - xmin < 1e-12) xmax = xmin + 1.0;
  if (ymax - ymin < 1e-12) ymax = ymin + 1.0;
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;
  const auto sx = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * pw; };
  const auto sy = [&](double v) { return mt + ph - (v - ymin) / (ymax - ymin) * ph; };
  static const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
         std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) + " " + std::to_string(height) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + detail::fmt2(ml + pw / 2) + "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" + title + "</text>\n";
  // Axes.
  out += "<line x1=\"" + detail::fmt2(ml) + "\" y1=\"" + detail::fmt2(mt + ph) + "\" x2=\"" + detail::fmt2(ml + pw) +
         "\" y2=\"" + detail::fmt2(mt + ph) + "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + detail::fmt2(ml) + "\" y1=\"" + detail::fmt2(mt) + "\" x2=\"" + detail::fmt2(ml) +
         "\" y2=\"" + detail::fmt2(mt + ph) + "\" stroke=\"black\"/>\n";
  // Ticks.
  for (int t = 0; t <= 4; ++t) {
    const double xv = xmin + (xmax - xmin) * t / 4.0;
    const double yv = ymin + (ymax - ymin) * t / 4.0;
    out += "<line x1=\"" + detail::fmt2(sx(xv)) + "\" y1=\"" + detail::fmt2(mt + ph) + "\" x2=\"" + detail::fmt2(sx(xv)) +
           "\" y2=\"" + detail::fmt2(mt + ph + 5) + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + detail::fmt2(sx(xv)) + "\" y=\"" + detail::fmt2(mt + ph + 20) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + detail::fmt_tick(xv) + "</text>\n";
    out += "<line x1=\"" + detail::fmt2(ml - 5) + "\" y1=\"" + detail::fmt2(sy(yv)) + "\" x2=\"" + detail::fmt2(ml) +
           "\" y2=\"" + detail::fmt2(sy(yv)) + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + detail::fmt2(ml - 8) + "\" y=\"" + detail::fmt2(sy(yv) + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + detail::fmt_tick(yv) + "</text>\n";
  }
  out += "<text x=\"" + detail::fmt2(ml + pw / 2) + "\" y=\"" + detail::fmt2(mt + ph + 38) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + x_label + "</text>\n";
  out += "<text x=\"16\" y=\"" + detail::fmt2(mt + ph / 2) + "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 " +
         detail::fmt2(mt + ph / 2) + ")\">" + y_label + "</text>\n";
  // Series.
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % (sizeof(kColors) / sizeof(kColors[0]))];
    std::string pts;
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      if (i) pts += " ";
      pts += detail::fmt2(sx(series[s].x[i])) + "," + detail::fmt2(sy(series[s].y[i]));
    }
    out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      out += "<circle cx=\"" + detail::fmt2(sx(series[s].x[i])) + "\" cy=\"" + detail::fmt2(sy(series[s].y[i])) +
             "\" r=\"2.5\" fill=\"" + std::string(color) + "\"/>\n";
    }
    const double ly = mt + 14 + 16 * static_cast<double>(s);
    out += "<line x1=\"" + detail::fmt2(ml + pw + 10) + "\" y1=\"" + detail::fmt2(ly - 4) + "\" x2=\"" +
           detail::fmt2(ml + pw + 30) + "\" y2=\"" + detail::fmt2(ly - 4) + "\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"1.5\"/>\n";
    out += "<text x=\"" + detail::fmt2(ml + pw + 35) + "\" y=\"" + detail::fmt2(ly) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + series[s].label + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace cgcn
