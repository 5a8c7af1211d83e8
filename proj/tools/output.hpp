#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace tool {

// RFC 4180 CSV with a header row.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void row(const std::vector<std::string>& cells);
  std::string str() const { return out_; }

 private:
  std::size_t width_;
  std::string out_;
  void append(const std::vector<std::string>& cells);
};

std::string num(double v);  // shortest round-trip form
std::string num(long long v);

struct Series {
  std::string name;
  std::vector<double> x, y;
  bool points = false;  // scatter instead of polyline
};

struct PlotSpec {
  std::string title, xlabel, ylabel;
  bool logx = false, logy = false;
};

// Self-contained SVG line / scatter plot; non-positive values are dropped on log axes.
std::string svg_plot(const PlotSpec& spec, const std::vector<Series>& series);

void write_file(const std::string& path, const std::string& content);

}  // namespace tool
