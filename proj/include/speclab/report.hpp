#pragma once

#include <string>
#include <vector>

namespace speclab {

/// Deterministic CSV writer: one header row, values rendered with %.17g so
/// identical runs produce byte-identical files.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  void addRow(const std::vector<double>& values);
  void addRow(const std::vector<std::string>& values);
  void write(const std::string& path) const;

  static std::string formatDouble(double v);

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Minimal semilog-y line/scatter plot. Convenience output only; nothing in
/// the test suite depends on pixels.
struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;  // must be positive for the log axis
  bool line = true;
};

void write_svg_semilogy(const std::string& path, const std::string& title,
                        const std::vector<SvgSeries>& series);

}  // namespace speclab
