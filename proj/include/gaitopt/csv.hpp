#pragma once

// Minimal CSV output with a fixed numeric format. %.17g round-trips doubles
// exactly, so summaries can be recomputed from the rows and re-runs diff
// byte for byte.

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gaitopt/common.hpp"

namespace gaitopt {

inline std::string csv_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : path_(path), f_(path) {
    require(f_.good(), "csv: cannot open " + path);
  }

  void header(const std::vector<std::string>& names) { write_strings(names); }

  void row(const std::vector<double>& values) {
    std::string line;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) line += ',';
      line += csv_double(values[i]);
    }
    f_ << line << '\n';
  }

  void row_mixed(const std::string& label, const std::vector<double>& values) {
    f_ << label;
    for (double v : values) f_ << ',' << csv_double(v);
    f_ << '\n';
  }

  void close() {
    f_.close();
    require(f_.good(), "csv: write failed for " + path_);
  }

 private:
  void write_strings(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) f_ << ',';
      f_ << cells[i];
    }
    f_ << '\n';
  }

  std::string path_;
  std::ofstream f_;
};

/// Parses a numeric CSV with one header row; returns (header, rows).
inline std::pair<std::vector<std::string>, std::vector<std::vector<double>>> read_csv(
    const std::string& path, int label_columns = 0) {
  std::ifstream f(path);
  require(f.good(), "csv: cannot open " + path);
  std::string line;
  require(static_cast<bool>(std::getline(f, line)), "csv: empty file " + path);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    int col = 0;
    while (std::getline(ss, cell, ',')) {
      if (col++ < label_columns) continue;  // skip leading label columns
      row.push_back(std::stod(cell));
    }
    rows.push_back(std::move(row));
  }
  return {header, rows};
}

}  // namespace gaitopt
