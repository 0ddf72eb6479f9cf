#pragma once

#include <string>
#include <vector>

namespace rinst {

struct LineSeries {
  std::string label;
  std::vector<double> y;  // x is the index; non-finite values leave gaps
  std::string color;      // empty picks from the palette
  bool dashed = false;
};

struct ChartOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  int width = 900;
  int height = 360;
};

std::string line_chart_svg(const std::vector<LineSeries>& series, const ChartOptions& opt);

/// Grouped bars: groups along x, one bar per series inside each group.
struct BarGroup {
  std::string label;
  std::vector<double> values;  // aligned with series names
};

std::string bar_chart_svg(const std::vector<std::string>& series_names,
                          const std::vector<BarGroup>& groups, const ChartOptions& opt);

/// Throws IoError when the file cannot be written.
void write_text_file(const std::string& path, const std::string& content);

}  // namespace rinst
