// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

#include "dynfilt/svg.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "dynfilt/errors.h"

namespace dynfilt {

namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};

std::string Escape(const std::string& s) {
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

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string Tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

std::string LineChartSvg(const ChartLabels& labels, const std::vector<ChartSeries>& series) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const ChartSeries& s : series) {
    if (s.x.size() != s.y.size() || s.x.empty()) {
      throw ContractError("chart series '" + s.name + "' needs equal, non-empty x and y");
    }
    for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : s.y) y0 = std::min(y0, v), y1 = std::max(y1, v);
  }
  if (series.empty()) throw ContractError("chart has no series");
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double v) { return kLeft + (v - x0) / (x1 - x0) * pw; };
  auto py = [&](double v) { return kTop + (y1 - v) / (y1 - y0) * ph; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
      << Escape(labels.title) << "</text>\n";
  out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\""
      << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4, yv = y0 + (y1 - y0) * i / 4;
    out << "<text x=\"" << Num(px(xv)) << "\" y=\"" << Num(kTop + ph + 16)
        << "\" text-anchor=\"middle\">" << Tick(xv) << "</text>\n";
    out << "<text x=\"" << Num(kLeft - 6) << "\" y=\"" << Num(py(yv) + 4)
        << "\" text-anchor=\"end\">" << Tick(yv) << "</text>\n";
    out << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + pw << "\" y1=\"" << Num(py(yv))
        << "\" y2=\"" << Num(py(yv)) << "\" stroke=\"#ddd\"/>\n";
  }
  out << "<text x=\"" << Num(kLeft + pw / 2) << "\" y=\"" << Num(kHeight - 10)
      << "\" text-anchor=\"middle\">" << Escape(labels.x_axis) << "</text>\n";
  out << "<text transform=\"translate(16," << Num(kTop + ph / 2)
      << ") rotate(-90)\" text-anchor=\"middle\">" << Escape(labels.y_axis) << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % std::size(kColors)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      out << (i ? " " : "") << Num(px(series[s].x[i])) << ',' << Num(py(series[s].y[i]));
    }
    out << "\"/>\n";
    const double ly = kTop + 14 + 18 * static_cast<double>(s);
    out << "<line x1=\"" << Num(kLeft + pw + 10) << "\" x2=\"" << Num(kLeft + pw + 30)
        << "\" y1=\"" << Num(ly - 4) << "\" y2=\"" << Num(ly - 4) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << Num(kLeft + pw + 34) << "\" y=\"" << Num(ly) << "\">"
        << Escape(series[s].name) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace dynfilt
