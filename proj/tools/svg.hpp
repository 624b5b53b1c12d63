#pragma once

#include <string>
#include <vector>

namespace etc::report {

struct Series {
  std::string name;
  std::vector<double> x, y;
  bool stems = false;  // vertical stems from the baseline instead of a polyline
};

struct Chart {
  std::string title, xlabel, ylabel;
  std::vector<Series> series;
  bool logy = false;
};

// Stacked panels sharing the horizontal axis.
std::string render(const std::vector<Chart>& panels, int width = 760, int panel_height = 260);

}  // namespace etc::report
