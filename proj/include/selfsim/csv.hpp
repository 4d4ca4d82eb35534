#pragma once

// CSV output: a `# config: ...` comment line, a header row, then rows of numbers in
// shortest round-trip form.

#include <charconv>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "selfsim/config.hpp"
#include "selfsim/errors.hpp"

namespace selfsim {

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& config_line, const std::vector<std::string>& header)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc), columns_(header.size()) {
    if (!out_) throw SolverError("cli", "cannot open '" + path + "' for writing");
    out_ << "# config: " << config_line << '\n';
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }

  void row(std::span<const double> values) {
    if (values.size() != columns_) throw SolverError("cli", "csv row width mismatch in '" + path_ + "'");
    for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << format_double(values[i]);
    out_ << '\n';
  }
  void row(std::initializer_list<double> values) { row(std::span<const double>(values.begin(), values.size())); }

  /// Mixed text/number row; text cells are written verbatim.
  void text_row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw SolverError("cli", "csv row width mismatch in '" + path_ + "'");
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

  void close() {
    out_.close();
    if (!out_) throw SolverError("cli", "failed writing '" + path_ + "'");
  }

 private:
  std::string path_;
  std::ofstream out_;
  std::size_t columns_;
};

/// Parsed CSV: the config comment, header and numeric rows (text cells become NaN).
struct CsvTable {
  std::string config;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw DomainError("csv: no column '" + name + "'");
  }
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("csv: cannot read '" + path + "'");
  CsvTable t;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(s);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  while (std::getline(in, line)) {
    if (line.rfind("# config: ", 0) == 0) {
      t.config = line.substr(10);
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    if (t.header.empty()) {
      t.header = split(line);
      continue;
    }
    std::vector<double> row;
    for (const auto& c : split(line)) {
      double x = std::numeric_limits<double>::quiet_NaN();
      std::from_chars(c.data(), c.data() + c.size(), x);
      row.push_back(x);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace selfsim
