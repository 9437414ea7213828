#include "speclab/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace speclab {

CsvTable::CsvTable(std::vector<std::string> header)
    : header_(std::move(header)) {}

std::string CsvTable::formatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void CsvTable::addRow(const std::vector<double>& values) {
  std::vector<std::string> row;
  row.reserve(values.size());
  for (double v : values) row.push_back(formatDouble(v));
  addRow(row);
}

void CsvTable::addRow(const std::vector<std::string>& values) {
  if (values.size() != header_.size()) {
    throw std::invalid_argument("CsvTable: row width does not match header");
  }
  rows_.push_back(values);
}

void CsvTable::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("CsvTable: cannot write " + path);
  for (size_t i = 0; i < header_.size(); ++i) {
    out << (i ? "," : "") << header_[i];
  }
  out << "\n";
  for (const auto& row : rows_) {
    for (size_t i = 0; i < row.size(); ++i) {
      out << (i ? "," : "") << row[i];
    }
    out << "\n";
  }
}

void write_svg_semilogy(const std::string& path, const std::string& title,
                        const std::vector<SvgSeries>& series) {
  const double W = 720, H = 480;
  const double ml = 70, mr = 20, mt = 40, mb = 50;

  double xMin = 1e300, xMax = -1e300, yMin = 1e300, yMax = -1e300;
  for (const auto& s : series) {
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (s.y[i] <= 0.0) continue;
      xMin = std::min(xMin, s.x[i]);
      xMax = std::max(xMax, s.x[i]);
      yMin = std::min(yMin, s.y[i]);
      yMax = std::max(yMax, s.y[i]);
    }
  }
  if (xMin > xMax || yMin > yMax) {
    xMin = 0, xMax = 1, yMin = 1, yMax = 10;
  }
  if (xMax == xMin) xMax = xMin + 1;
  double lyMin = std::log10(yMin), lyMax = std::log10(yMax);
  if (lyMax - lyMin < 1e-12) lyMax = lyMin + 1;

  auto px = [&](double x) {
    return ml + (x - xMin) / (xMax - xMin) * (W - ml - mr);
  };
  auto py = [&](double y) {
    return H - mb - (std::log10(y) - lyMin) / (lyMax - lyMin) * (H - mt - mb);
  };

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("svg: cannot write " + path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W
      << "' height='" << H << "' viewBox='0 0 " << W << " " << H << "'>\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << W / 2 << "' y='24' text-anchor='middle' "
      << "font-family='sans-serif' font-size='16'>" << title << "</text>\n";
  out << "<rect x='" << ml << "' y='" << mt << "' width='" << W - ml - mr
      << "' height='" << H - mt - mb
      << "' fill='none' stroke='#444' stroke-width='1'/>\n";

  // Decade grid lines and labels.
  for (int d = static_cast<int>(std::ceil(lyMin));
       d <= static_cast<int>(std::floor(lyMax)); ++d) {
    double y = py(std::pow(10.0, d));
    out << "<line x1='" << ml << "' y1='" << y << "' x2='" << W - mr
        << "' y2='" << y << "' stroke='#ccc' stroke-width='0.5'/>\n";
    out << "<text x='" << ml - 6 << "' y='" << y + 4
        << "' text-anchor='end' font-family='sans-serif' font-size='11'>1e"
        << d << "</text>\n";
  }
  const int xTicks = 6;
  for (int i = 0; i <= xTicks; ++i) {
    double x = xMin + (xMax - xMin) * i / xTicks;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", x);
    out << "<text x='" << px(x) << "' y='" << H - mb + 18
        << "' text-anchor='middle' font-family='sans-serif' font-size='11'>"
        << buf << "</text>\n";
  }

  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b"};
  for (size_t s = 0; s < series.size(); ++s) {
    const auto& ser = series[s];
    const char* color = colors[s % 6];
    if (ser.line) {
      out << "<polyline fill='none' stroke='" << color
          << "' stroke-width='1.5' points='";
      for (size_t i = 0; i < ser.x.size(); ++i) {
        if (ser.y[i] <= 0.0) continue;
        out << px(ser.x[i]) << "," << py(ser.y[i]) << " ";
      }
      out << "'/>\n";
    }
    for (size_t i = 0; i < ser.x.size(); ++i) {
      if (ser.y[i] <= 0.0) continue;
      out << "<circle cx='" << px(ser.x[i]) << "' cy='" << py(ser.y[i])
          << "' r='2.5' fill='" << color << "'/>\n";
    }
    out << "<text x='" << W - mr - 8 << "' y='" << mt + 16 + 14 * s
        << "' text-anchor='end' font-family='sans-serif' font-size='12' "
        << "fill='" << color << "'>" << ser.label << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace speclab
