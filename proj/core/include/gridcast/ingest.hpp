#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gridcast/timeutil.hpp"

namespace gridcast {

/// One interruption record. Timestamps are UTC epoch minutes.
struct OutageEvent {
  std::string event_id;
  std::string substation_id;
  std::int64_t start_minute = 0;
  std::int64_t end_minute = 0;
  std::int64_t customers_affected = 0;
  std::string cause; // optional tag, may be empty

  double duration_minutes() const {
    return static_cast<double>(end_minute - start_minute);
  }
  YearMonth start_month() const { return month_of_minutes(start_minute); }
};

struct SubstationRecord {
  std::string substation_id;
  double lon = 0.0;
  double lat = 0.0;
  std::int64_t customers_total = 0;
};

class SubstationRegistry {
 public:
  void add(SubstationRecord rec); // throws ValidationError on duplicates
  bool contains(const std::string& id) const;
  const SubstationRecord& at(const std::string& id) const;
  const std::vector<SubstationRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  std::int64_t total_customers() const;
  /// Position of the id in insertion order; -1 if absent.
  int index_of(const std::string& id) const;

 private:
  std::vector<SubstationRecord> records_;
  std::map<std::string, std::size_t> index_;
};

struct InstallRecord {
  std::string household_id;
  std::string substation_id;
  std::int64_t date_days = 0; // days since epoch

  YearMonth month() const { return month_of_day(date_days); }
};

/// Long-format numeric panel keyed by (substation, month). Cells may be NaN
/// only in derived panels (rolling windows); loaded covariate files must be
/// fully finite.
class CovariatePanel {
 public:
  struct Row {
    std::string substation_id;
    YearMonth month;
    std::vector<double> values;
  };

  explicit CovariatePanel(std::vector<std::string> columns = {});

  const std::vector<std::string>& columns() const { return columns_; }
  int column_index(const std::string& name) const; // -1 if absent
  int require_column(const std::string& name) const;
  /// Appends a column filled with NaN; returns its index.
  int add_column(const std::string& name);

  void add_row(Row row); // throws ValidationError on duplicate key
  const std::vector<Row>& rows() const { return rows_; }
  std::vector<Row>& rows() { return rows_; }

  const Row* find(const std::string& substation_id, YearMonth month) const;
  Row* find(const std::string& substation_id, YearMonth month);
  double value(const std::string& substation_id, YearMonth month, int column) const;

  /// Smallest range covering every row month; throws on an empty panel.
  MonthRange month_span() const;

 private:
  std::vector<std::string> columns_;
  std::vector<Row> rows_;
  std::map<std::pair<std::string, int>, std::size_t> index_;
};

// ------------------------------------------------------------------ loaders
// All loaders reject the whole file on the first bad row, reporting the
// source line. Schemas are documented in the README.

std::vector<OutageEvent> load_events(const std::string& path);
SubstationRegistry load_registry(const std::string& path);
CovariatePanel load_covariates(const std::string& path);
std::vector<InstallRecord> load_installs(const std::string& path);

// ------------------------------------------------------------------ writers
// Deterministic field formatting; loaders round-trip every field.

void write_events(const std::string& path, std::span<const OutageEvent> events,
                  std::span<const std::string> header_comments = {});
void write_registry(const std::string& path, const SubstationRegistry& registry,
                    std::span<const std::string> header_comments = {});
void write_covariates(const std::string& path, const CovariatePanel& panel,
                      std::span<const std::string> header_comments = {});
void write_installs(const std::string& path, std::span<const InstallRecord> installs,
                    std::span<const std::string> header_comments = {});

/// Columns appended to the covariate panel by assemble_panel. Raw event
/// aggregates only; reliability indices are derived in the reliability
/// module.
inline constexpr const char* kColEventCount = "n_events";
inline constexpr const char* kColCustomerMinutes = "customer_minutes";
inline constexpr const char* kColCustomersInterrupted = "customers_interrupted";
inline constexpr const char* kColInstalls = "installs";

/// Builds the balanced (substation x month) grid over `window`, attaching
/// per-month outage aggregates and install counts to the covariate columns.
/// Events are attributed to the month of their start. Events and installs
/// outside the window are ignored; rows referencing unknown substations are
/// errors. Every (substation, month) cell of `covariates` inside the window
/// must be present (no imputation).
CovariatePanel assemble_panel(std::span<const OutageEvent> events,
                              const SubstationRegistry& registry,
                              const CovariatePanel& covariates,
                              std::span<const InstallRecord> installs,
                              MonthRange window);

} // namespace gridcast
