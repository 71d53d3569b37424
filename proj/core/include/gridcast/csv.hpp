#pragma once

#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace gridcast {

/// A parsed CSV file. Lines starting with '#' are metadata comments and are
/// skipped; row line numbers are preserved for error reporting.
struct CsvTable {
  std::string path;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers; // 1-based source line per row

  int column_index(const std::string& name) const; // -1 if absent
  int require_column(const std::string& name) const; // throws ParseError
};

CsvTable read_csv(const std::string& path);
CsvTable read_csv_text(const std::string& text, const std::string& path_label);

/// RFC-4180-style field quoting, applied only when needed.
std::string csv_quote(const std::string& field);

/// Fixed formatting used by every emitted table: 6 significant digits,
/// integers without a decimal point. NaN renders as an empty cell.
std::string format_number(double v);

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);

  void comment(const std::string& line); // "# line"
  void header(std::span<const std::string> columns);
  void row(std::span<const std::string> cells);
  void close();

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
  std::size_t n_columns_ = 0;
  bool header_written_ = false;
};

} // namespace gridcast
