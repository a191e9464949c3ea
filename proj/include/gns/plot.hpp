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

#pragma once

#include <string>
#include <vector>

namespace gns::plot {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;  // NaN entries break the polyline
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  std::vector<Series> series;
};

struct BarChart {
  std::string title;
  std::string y_label;
  bool log_y = false;
  std::vector<std::string> labels;
  std::vector<double> values;
  std::vector<double> low;  // optional whiskers, same length as values
  std::vector<double> high;
};

std::string line_chart_svg(const LineChart& chart);
std::string bar_chart_svg(const BarChart& chart);
/// Charts side by side in one document.
std::string combine_svg(const std::vector<std::string>& panels);

/// Minimal numeric CSV: header names and rows; empty cells become NaN.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> cells;
  int column(const std::string& name) const;  // -1 if absent
  std::vector<double> numbers(int column) const;
};
Table parse_csv(const std::string& text);

}  // namespace gns::plot
