#include "gridcast/report.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "gridcast/csv.hpp"
#include "gridcast/error.hpp"
#include "gridcast/version.hpp"

namespace gridcast {

void Table::add_row(std::vector<Cell> cells) {
  if (cells.size() != columns.size()) {
    throw Error("table row width " + std::to_string(cells.size()) +
                " != column count " + std::to_string(columns.size()));
  }
  rows.push_back(std::move(cells));
}

std::string cell_to_string(const Table::Cell& cell) {
  if (const auto* s = std::get_if<std::string>(&cell)) return *s;
  if (const auto* d = std::get_if<double>(&cell)) return format_number(*d);
  return std::to_string(std::get<std::int64_t>(cell));
}

namespace {

std::vector<std::string> meta_lines(const ReportMeta& meta) {
  std::vector<std::string> lines;
  lines.push_back(std::string("gridcast ") + kVersion);
  lines.push_back("seed=" + std::to_string(meta.seed));
  lines.push_back("config_hash=" + (meta.config_hash.empty() ? "none" : meta.config_hash));
  for (const auto& n : meta.notes) lines.push_back(n);
  return lines;
}

void write_csv_report(const Table& t, const ReportMeta& meta, const std::string& path) {
  CsvWriter w(path);
  for (const auto& line : meta_lines(meta)) w.comment(line);
  w.header(t.columns);
  std::vector<std::string> cells(t.columns.size());
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) cells[i] = cell_to_string(row[i]);
    w.row(cells);
  }
  w.close();
}

void write_json_report(const Table& t, const ReportMeta& meta, const std::string& path) {
  nlohmann::ordered_json doc;
  doc["generator"] = std::string("gridcast ") + kVersion;
  doc["seed"] = meta.seed;
  doc["config_hash"] = meta.config_hash.empty() ? "none" : meta.config_hash;
  for (const auto& n : meta.notes) {
    auto pos = n.find('=');
    if (pos != std::string::npos) doc[n.substr(0, pos)] = n.substr(pos + 1);
  }
  doc["columns"] = t.columns;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    nlohmann::ordered_json r = nlohmann::ordered_json::array();
    for (const auto& cell : row) {
      // Stringify doubles with the shared 6-significant-digit format so the
      // json and csv variants are value-identical.
      if (std::holds_alternative<double>(cell)) r.push_back(cell_to_string(cell));
      else if (std::holds_alternative<std::int64_t>(cell)) r.push_back(std::get<std::int64_t>(cell));
      else r.push_back(std::get<std::string>(cell));
    }
    rows.push_back(std::move(r));
  }
  doc["rows"] = std::move(rows);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << doc.dump(2) << "\n";
  if (!out) throw Error("write failure on '" + path + "'");
}

void write_text_report(const Table& t, const ReportMeta& meta, const std::string& path) {
  std::vector<std::size_t> widths(t.columns.size());
  for (std::size_t i = 0; i < t.columns.size(); ++i) widths[i] = t.columns[i].size();
  std::vector<std::vector<std::string>> rendered;
  rendered.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    std::vector<std::string> cells(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) {
      cells[i] = cell_to_string(row[i]);
      widths[i] = std::max(widths[i], cells[i].size());
    }
    rendered.push_back(std::move(cells));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  for (const auto& line : meta_lines(meta)) out << "# " << line << "\n";
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      out << cells[i];
      if (i + 1 < cells.size()) out << std::string(widths[i] - cells[i].size() + 2, ' ');
    }
    out << "\n";
  };
  emit(t.columns);
  std::size_t total = 0;
  for (std::size_t w : widths) total += w + 2;
  out << std::string(total > 2 ? total - 2 : total, '-') << "\n";
  for (const auto& cells : rendered) emit(cells);
  if (!out) throw Error("write failure on '" + path + "'");
}

} // namespace

void write_report(const Table& table, const ReportMeta& meta, ReportFormat format,
                  const std::string& path) {
  if (table.rows.empty()) throw Error("nothing to report");
  switch (format) {
    case ReportFormat::csv: write_csv_report(table, meta, path); break;
    case ReportFormat::json: write_json_report(table, meta, path); break;
    case ReportFormat::text: write_text_report(table, meta, path); break;
  }
}

ReportFormat parse_report_format(const std::string& name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "json") return ReportFormat::json;
  if (name == "text") return ReportFormat::text;
  throw Error("unknown report format '" + name + "' (expected csv, json or text)");
}

std::string report_extension(ReportFormat format) {
  switch (format) {
    case ReportFormat::csv: return ".csv";
    case ReportFormat::json: return ".json";
    default: return ".txt";
  }
}

std::string fnv1a64_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

} // namespace gridcast
