#pragma once

#include <string>
#include <vector>

namespace sphero {

/// Numeric CSV with a header row, as written by write_csv.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Column index, or -1.
  int column(const std::string& name) const;
  std::vector<double> values(int column) const;
};

/// Throws ValidationError on unreadable or ragged input.
CsvTable read_csv(const std::string& path);

struct Series {
  std::string label;
  std::string color;
  std::vector<double> x;
  std::vector<double> y;
};

struct Panel {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  /// Same scale on both axes (path plots).
  bool equal_aspect{false};
};

/// SVG 1.1 document with the panels stacked vertically. Series with one
/// sample are drawn as points, longer ones as polylines.
std::string render_svg(const std::vector<Panel>& panels);

/// Writes path.svg, position_error.svg, angular_velocity_error.svg and
/// actuators.svg into `dir`. Throws ValidationError for an empty log.
/// Returns the written paths.
std::vector<std::string> plot_log(const CsvTable& log, const std::string& dir);

}  // namespace sphero
