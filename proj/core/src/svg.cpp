// Copyright 2026 The colora Authors
// SPDX-License-Identifier: Apache-2.0

#include "colora/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace colora {

namespace {

constexpr int kWidth = 720, kHeight = 480;
constexpr int kLeft = 70, kRight = 30, kTop = 50, kBottom = 60;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

void write_line_plot(std::ostream& os, const std::string& title, const std::string& x_label,
                     const std::string& y_label, const std::vector<PlotSeries>& series) {
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool have = false;
  for (const PlotSeries& s : series) {
    for (const auto& [x, y] : s.points) {
      if (!have) {
        xmin = xmax = x;
        ymin = ymax = y;
        have = true;
      }
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * plot_w; };
  auto sy = [&](double y) { return kTop + plot_h - (y - ymin) / (ymax - ymin) * plot_h; };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  os << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" "
        "font-family=\"sans-serif\">"
     << title << "</text>\n";

  // Axes with 5 ticks each.
  os << "<g stroke=\"#333\" stroke-width=\"1\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w
     << "\" y2=\"" << kTop + plot_h << "\"/>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
     << kTop + plot_h << "\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 5.0;
    const double yv = ymin + (ymax - ymin) * i / 5.0;
    os << "<line x1=\"" << sx(xv) << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << sx(xv)
       << "\" y2=\"" << kTop + plot_h + 5 << "\"/>\n";
    os << "<text x=\"" << sx(xv) << "\" y=\"" << kTop + plot_h + 18
       << "\" text-anchor=\"middle\" stroke=\"none\" fill=\"#333\">" << fmt(xv) << "</text>\n";
    os << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << sy(yv) << "\" x2=\"" << kLeft << "\" y2=\""
       << sy(yv) << "\"/>\n";
    os << "<text x=\"" << kLeft - 8 << "\" y=\"" << sy(yv) + 4
       << "\" text-anchor=\"end\" stroke=\"none\" fill=\"#333\">" << fmt(yv) << "</text>\n";
  }
  os << "</g>\n";
  os << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 12
     << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">" << x_label
     << "</text>\n";
  os << "<text x=\"18\" y=\"" << kTop + plot_h / 2
     << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" transform=\"rotate(-90 "
        "18 "
     << kTop + plot_h / 2 << ")\">" << y_label << "</text>\n";

  for (size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
    for (const auto& [x, y] : series[i].points) {
      os << sx(x) << ',' << sy(y) << ' ';
    }
    os << "\"/>\n";
    const double ly = kTop + 6 + 16.0 * static_cast<double>(i);
    os << "<line x1=\"" << kLeft + plot_w - 130 << "\" y1=\"" << ly << "\" x2=\""
       << kLeft + plot_w - 110 << "\" y2=\"" << ly << "\" stroke=\"" << color
       << "\" stroke-width=\"1.8\"/>\n";
    os << "<text x=\"" << kLeft + plot_w - 104 << "\" y=\"" << ly + 4
       << "\" font-size=\"11\" font-family=\"sans-serif\">" << series[i].label << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace colora
