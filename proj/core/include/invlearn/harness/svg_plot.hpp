#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace invlearn::harness {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool markers = true;  // points; otherwise a polyline
  std::string color = "#1f77b4";
  bool dashed = false;
};

/// Minimal log-log chart. Nonpositive values are skipped.
std::string loglog_svg(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                       const std::vector<PlotSeries>& series);
void write_loglog_svg(const std::filesystem::path& path, const std::string& title, const std::string& xlabel,
                      const std::string& ylabel, const std::vector<PlotSeries>& series);

}  // namespace invlearn::harness
