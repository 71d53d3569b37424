#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace gridcast {

enum class ReportFormat { csv, json, text };

/// A generic results table. Doubles are rendered with 6 significant digits
/// in every format so the csv/json/text variants carry identical values.
struct Table {
  using Cell = std::variant<std::string, double, std::int64_t>;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> cells);
};

/// Provenance stamped into every report: library version, the seed in
/// effect, and a hash of the effective configuration.
struct ReportMeta {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<std::string> notes; // extra "key=value" comment lines
};

/// Writes the table to `path`. Throws Error when the table has no rows
/// ("nothing to report") or the destination is unwritable.
void write_report(const Table& table, const ReportMeta& meta, ReportFormat format,
                  const std::string& path);

std::string cell_to_string(const Table::Cell& cell);

ReportFormat parse_report_format(const std::string& name);
std::string report_extension(ReportFormat format);

/// FNV-1a 64-bit, rendered as 16 hex digits.
std::string fnv1a64_hex(std::string_view bytes);

} // namespace gridcast
