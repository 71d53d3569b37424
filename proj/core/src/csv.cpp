#include "gridcast/csv.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "gridcast/error.hpp"

namespace gridcast {

namespace {

std::vector<std::string> split_record(const std::string& line, const std::string& path,
                                      int line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      if (!cur.empty()) throw ParseError(path, line_no, "unexpected quote inside field");
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw ParseError(path, line_no, "unterminated quoted field");
  fields.push_back(cur);
  return fields;
}

} // namespace

int CsvTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<int>(i);
  }
  return -1;
}

int CsvTable::require_column(const std::string& name) const {
  int idx = column_index(name);
  if (idx < 0) throw ParseError(path + ": missing required column '" + name + "'");
  return idx;
}

CsvTable read_csv_text(const std::string& text, const std::string& path_label) {
  CsvTable t;
  t.path = path_label;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') continue;
    auto fields = split_record(line, path_label, line_no);
    if (!header_seen) {
      t.columns = std::move(fields);
      header_seen = true;
      continue;
    }
    if (fields.size() != t.columns.size()) {
      throw ParseError(path_label, line_no,
                       "expected " + std::to_string(t.columns.size()) + " fields, got " +
                           std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.line_numbers.push_back(line_no);
  }
  if (!header_seen) throw ParseError(path_label + ": empty file (no header row)");
  return t;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return read_csv_text(ss.str(), path);
}

std::string csv_quote(const std::string& field) {
  bool needs = field.find_first_of(",\"\n\r") != std::string::npos;
  if (!needs) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "";
  if (v == 0.0) return "0"; // avoid "-0"
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
  if (!out_) throw Error("cannot open '" + path + "' for writing");
}

void CsvWriter::comment(const std::string& line) {
  if (header_written_) throw Error("metadata comments must precede the header");
  out_ << "# " << line << "\n";
}

void CsvWriter::header(std::span<const std::string> columns) {
  n_columns_ = columns.size();
  header_written_ = true;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out_ << ',';
    out_ << csv_quote(columns[i]);
  }
  out_ << "\n";
}

void CsvWriter::row(std::span<const std::string> cells) {
  if (!header_written_) throw Error("row written before header");
  if (cells.size() != n_columns_) {
    throw Error("row width " + std::to_string(cells.size()) + " != header width " +
                std::to_string(n_columns_));
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << csv_quote(cells[i]);
  }
  out_ << "\n";
}

void CsvWriter::close() {
  out_.flush();
  if (!out_) throw Error("write failure on '" + path_ + "'");
  out_.close();
}

} // namespace gridcast
