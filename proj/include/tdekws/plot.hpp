#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace tdekws {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> err;  // optional symmetric error bars, same size as y
};

struct ChartText {
  std::string title;
  std::string x_label;
  std::string y_label;
};

// Static SVG documents. Output depends only on the inputs.
std::string line_chart(const ChartText& text, const std::vector<Series>& series);
std::string scatter_chart(const ChartText& text,
                          const std::vector<Series>& series);
// Grouped bars: one group per category, one bar per series (series[i].y has
// one value per category).
std::string bar_chart(const ChartText& text,
                      const std::vector<std::string>& categories,
                      const std::vector<Series>& series);

void save_svg(const std::filesystem::path& path, const std::string& svg);

}  // namespace tdekws
