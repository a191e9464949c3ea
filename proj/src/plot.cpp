/*
 * Copyright 2026 The gns-desk Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "gns/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "gns/error.hpp"

namespace gns::plot {

namespace {

constexpr double kWidth = 520, kHeight = 360;
constexpr double kLeft = 78, kRight = 20, kTop = 34, kBottom = 52;
const char* const kPalette[] = {"#c0392b", "#2e86c1", "#27ae60", "#8e44ad", "#d68910", "#566573"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

std::string esc(const std::string& s) {
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

// Maps data values to pixel coordinates, optionally on a log scale.
struct Axis {
  double lo = 0, hi = 1;
  bool log = false;
  double px0 = 0, px1 = 1;

  double t(double v) const { return log ? std::log10(v) : v; }
  double map(double v) const {
    const double a = t(lo), b = t(hi);
    return px0 + (t(v) - a) / (b - a) * (px1 - px0);
  }
  std::vector<double> ticks() const {
    std::vector<double> out;
    if (log) {
      for (double e = std::floor(std::log10(lo)); e <= std::ceil(std::log10(hi)); e += 1) {
        const double v = std::pow(10.0, e);
        if (v >= lo * 0.999 && v <= hi * 1.001) out.push_back(v);
      }
      if (out.size() < 2) out = {lo, hi};
      return out;
    }
    for (int i = 0; i <= 4; ++i) out.push_back(lo + (hi - lo) * i / 4.0);
    return out;
  }
};

Axis fit_axis(double lo, double hi, bool log, double px0, double px1) {
  Axis a;
  a.log = log;
  a.px0 = px0;
  a.px1 = px1;
  if (!(lo <= hi)) {
    lo = log ? 1e-12 : 0.0;
    hi = 1.0;
  }
  if (log) {
    lo = std::max(lo, 1e-300);
    if (hi <= lo) hi = lo * 10;
    a.lo = std::pow(10.0, std::floor(std::log10(lo)));
    a.hi = std::pow(10.0, std::ceil(std::log10(hi)));
    if (a.hi <= a.lo) a.hi = a.lo * 10;
  } else {
    if (hi == lo) {
      lo -= 0.5;
      hi += 0.5;
    }
    a.lo = lo;
    a.hi = hi;
  }
  return a;
}

void frame(std::ostringstream& s, const std::string& title, const std::string& x_label,
           const std::string& y_label, const Axis& y) {
  s << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" fill=\"white\"/>\n";
  s << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
    << esc(title) << "</text>\n";
  s << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << kWidth - kRight
    << "\" y2=\"" << kHeight - kBottom << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
    << kHeight - kBottom << "\" stroke=\"black\"/>\n";
  for (double v : y.ticks()) {
    const double py = y.map(v);
    s << "<line x1=\"" << kLeft - 4 << "\" y1=\"" << py << "\" x2=\"" << kWidth - kRight
      << "\" y2=\"" << py << "\" stroke=\"#e5e5e5\"/>\n";
    s << "<text x=\"" << kLeft - 6 << "\" y=\"" << py + 4
      << "\" text-anchor=\"end\" font-size=\"10\">" << fmt(v) << "</text>\n";
  }
  s << "<text x=\"" << (kLeft + kWidth - kRight) / 2 << "\" y=\"" << kHeight - 12
    << "\" text-anchor=\"middle\" font-size=\"12\">" << esc(x_label) << "</text>\n";
  s << "<text transform=\"translate(16," << (kTop + kHeight - kBottom) / 2
    << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"12\">" << esc(y_label) << "</text>\n";
}

std::string open_svg(double w, double h) {
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
    << "\" viewBox=\"0 0 " << w << " " << h << "\" font-family=\"sans-serif\">\n";
  return s.str();
}

bool usable(double v, bool log) { return std::isfinite(v) && (!log || v > 0); }

}  // namespace

std::string line_chart_svg(const LineChart& chart) {
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
  for (const Series& s : chart.series) {
    if (s.x.size() != s.y.size()) throw usage_error("series '" + s.name + "' has mismatched x/y");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!usable(s.y[i], chart.log_y) || !std::isfinite(s.x[i])) continue;
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
    }
  }
  const Axis x = fit_axis(xlo, xhi, false, kLeft, kWidth - kRight);
  const Axis y = fit_axis(ylo, yhi, chart.log_y, kHeight - kBottom, kTop);
  std::ostringstream s;
  s << open_svg(kWidth, kHeight);
  frame(s, chart.title, chart.x_label, chart.y_label, y);
  for (double v : x.ticks()) {
    s << "<text x=\"" << x.map(v) << "\" y=\"" << kHeight - kBottom + 16
      << "\" text-anchor=\"middle\" font-size=\"10\">" << fmt(v) << "</text>\n";
  }
  for (std::size_t k = 0; k < chart.series.size(); ++k) {
    const Series& ser = chart.series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    std::string pts;
    auto flush = [&] {
      if (!pts.empty()) {
        s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.6\" points=\""
          << pts << "\"/>\n";
      }
      pts.clear();
    };
    for (std::size_t i = 0; i < ser.x.size(); ++i) {
      if (!usable(ser.y[i], chart.log_y)) {
        flush();
        continue;
      }
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", x.map(ser.x[i]), y.map(ser.y[i]));
      pts += buf;
    }
    flush();
    const double ly = kTop + 14 + 16.0 * static_cast<double>(k);
    s << "<line x1=\"" << kWidth - kRight - 120 << "\" y1=\"" << ly - 4 << "\" x2=\""
      << kWidth - kRight - 100 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color
      << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << kWidth - kRight - 95 << "\" y=\"" << ly << "\" font-size=\"11\">"
      << esc(ser.name) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string bar_chart_svg(const BarChart& chart) {
  const std::size_t n = chart.values.size();
  if (chart.labels.size() != n) throw usage_error("bar chart labels and values differ in length");
  const bool whiskers = chart.low.size() == n && chart.high.size() == n;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < n; ++i) {
    for (double v : {chart.values[i], whiskers ? chart.low[i] : chart.values[i],
                     whiskers ? chart.high[i] : chart.values[i]}) {
      if (!usable(v, chart.log_y)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!chart.log_y) lo = std::min(lo, 0.0);
  const Axis y = fit_axis(lo, hi, chart.log_y, kHeight - kBottom, kTop);
  std::ostringstream s;
  s << open_svg(kWidth, kHeight);
  frame(s, chart.title, "", chart.y_label, y);
  const double slot = (kWidth - kLeft - kRight) / static_cast<double>(std::max<std::size_t>(n, 1));
  const double base = chart.log_y ? kHeight - kBottom : y.map(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double cx = kLeft + slot * (static_cast<double>(i) + 0.5);
    if (usable(chart.values[i], chart.log_y)) {
      const double top = y.map(chart.values[i]);
      s << "<rect x=\"" << cx - slot * 0.3 << "\" y=\"" << std::min(top, base) << "\" width=\""
        << slot * 0.6 << "\" height=\"" << std::abs(base - top) << "\" fill=\""
        << (i == 0 ? kPalette[0] : "#9e9e9e") << "\"/>\n";
    }
    if (whiskers && usable(chart.low[i], chart.log_y) && usable(chart.high[i], chart.log_y)) {
      s << "<line x1=\"" << cx << "\" y1=\"" << y.map(chart.low[i]) << "\" x2=\"" << cx
        << "\" y2=\"" << y.map(chart.high[i]) << "\" stroke=\"black\"/>\n";
    }
    s << "<text x=\"" << cx << "\" y=\"" << kHeight - kBottom + 16
      << "\" text-anchor=\"middle\" font-size=\"11\">" << esc(chart.labels[i]) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string combine_svg(const std::vector<std::string>& panels) {
  std::ostringstream s;
  s << open_svg(kWidth * static_cast<double>(panels.size()), kHeight);
  for (std::size_t i = 0; i < panels.size(); ++i) {
    s << "<g transform=\"translate(" << kWidth * static_cast<double>(i) << ",0)\">\n";
    // Strip the inner <svg> wrapper.
    const std::string& p = panels[i];
    const auto open_end = p.find('>');
    const auto close = p.rfind("</svg>");
    s << p.substr(open_end + 2, close - open_end - 2);
    s << "</g>\n";
  }
  s << "</svg>\n";
  return s.str();
}

int Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

std::vector<double> Table::numbers(int col) const {
  std::vector<double> out;
  for (const auto& row : cells) {
    const std::string& c = static_cast<std::size_t>(col) < row.size() ? row[col] : std::string();
    if (c.empty()) {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    char* end = nullptr;
    const double v = std::strtod(c.c_str(), &end);
    out.push_back(end && *end == '\0' ? v : std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

Table parse_csv(const std::string& text) {
  Table t;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      t.cells.push_back(std::move(cells));
    }
  }
  if (t.header.empty()) throw data_error("CSV input is empty");
  return t;
}

}  // namespace gns::plot
