#include "gridcast/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "gridcast/csv.hpp"
#include "gridcast/error.hpp"

namespace gridcast {

namespace {

double parse_double(const CsvTable& t, std::size_t row, int col) {
  const std::string& s = t.rows[row][col];
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw ParseError(t.path, t.line_numbers[row],
                     "invalid numeric value '" + s + "' in column '" + t.columns[col] + "'");
  }
  return v;
}

std::int64_t parse_int(const CsvTable& t, std::size_t row, int col) {
  const std::string& s = t.rows[row][col];
  char* end = nullptr;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw ParseError(t.path, t.line_numbers[row],
                     "invalid integer '" + s + "' in column '" + t.columns[col] + "'");
  }
  return v;
}

} // namespace

// --------------------------------------------------------------- registry

void SubstationRegistry::add(SubstationRecord rec) {
  if (index_.count(rec.substation_id)) {
    throw ValidationError("duplicate substation id '" + rec.substation_id + "'");
  }
  if (rec.customers_total < 1) {
    throw ValidationError("substation '" + rec.substation_id + "' has customers_total < 1");
  }
  if (!std::isfinite(rec.lon) || !std::isfinite(rec.lat)) {
    throw ValidationError("substation '" + rec.substation_id + "' has non-finite coordinates");
  }
  index_[rec.substation_id] = records_.size();
  records_.push_back(std::move(rec));
}

bool SubstationRegistry::contains(const std::string& id) const { return index_.count(id) > 0; }

const SubstationRecord& SubstationRegistry::at(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw ValidationError("unknown substation '" + id + "'");
  return records_[it->second];
}

std::int64_t SubstationRegistry::total_customers() const {
  std::int64_t total = 0;
  for (const auto& r : records_) total += r.customers_total;
  return total;
}

int SubstationRegistry::index_of(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? -1 : static_cast<int>(it->second);
}

// ----------------------------------------------------------------- panel

CovariatePanel::CovariatePanel(std::vector<std::string> columns)
    : columns_(std::move(columns)) {}

int CovariatePanel::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i] == name) return static_cast<int>(i);
  }
  return -1;
}

int CovariatePanel::require_column(const std::string& name) const {
  int idx = column_index(name);
  if (idx < 0) throw ValidationError("panel is missing column '" + name + "'");
  return idx;
}

int CovariatePanel::add_column(const std::string& name) {
  if (column_index(name) >= 0) throw ValidationError("panel already has column '" + name + "'");
  columns_.push_back(name);
  for (auto& row : rows_) row.values.push_back(std::nan(""));
  return static_cast<int>(columns_.size()) - 1;
}

void CovariatePanel::add_row(Row row) {
  if (row.values.size() != columns_.size()) {
    throw ValidationError("panel row width mismatch for substation '" + row.substation_id + "'");
  }
  auto key = std::make_pair(row.substation_id, row.month.index());
  if (index_.count(key)) {
    throw ValidationError("duplicate (substation, month) key (" + row.substation_id + ", " +
                          row.month.str() + ")");
  }
  index_[key] = rows_.size();
  rows_.push_back(std::move(row));
}

const CovariatePanel::Row* CovariatePanel::find(const std::string& substation_id,
                                                YearMonth month) const {
  auto it = index_.find(std::make_pair(substation_id, month.index()));
  return it == index_.end() ? nullptr : &rows_[it->second];
}

CovariatePanel::Row* CovariatePanel::find(const std::string& substation_id, YearMonth month) {
  auto it = index_.find(std::make_pair(substation_id, month.index()));
  return it == index_.end() ? nullptr : &rows_[it->second];
}

double CovariatePanel::value(const std::string& substation_id, YearMonth month,
                             int column) const {
  const Row* row = find(substation_id, month);
  if (!row) {
    throw ValidationError("missing panel cell (" + substation_id + ", " + month.str() + ")");
  }
  return row->values.at(column);
}

MonthRange CovariatePanel::month_span() const {
  if (rows_.empty()) throw ValidationError("empty panel has no month span");
  int lo = rows_.front().month.index();
  int hi = lo;
  for (const auto& r : rows_) {
    lo = std::min(lo, r.month.index());
    hi = std::max(hi, r.month.index());
  }
  return MonthRange{YearMonth::from_index(lo), YearMonth::from_index(hi)};
}

// ---------------------------------------------------------------- loaders

std::vector<OutageEvent> load_events(const std::string& path) {
  CsvTable t = read_csv(path);
  const int c_id = t.require_column("event_id");
  const int c_sub = t.require_column("substation_id");
  const int c_start = t.require_column("start");
  const int c_end = t.require_column("end");
  const int c_cust = t.require_column("customers_affected");
  const int c_cause = t.column_index("cause");

  std::vector<OutageEvent> events;
  events.reserve(t.rows.size());
  std::set<std::string> seen_ids;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    OutageEvent e;
    e.event_id = t.rows[i][c_id];
    e.substation_id = t.rows[i][c_sub];
    if (e.event_id.empty()) throw ParseError(path, t.line_numbers[i], "empty event_id");
    if (!seen_ids.insert(e.event_id).second) {
      throw ParseError(path, t.line_numbers[i], "duplicate event_id '" + e.event_id + "'");
    }
    try {
      e.start_minute = parse_timestamp_minutes(t.rows[i][c_start]);
      e.end_minute = parse_timestamp_minutes(t.rows[i][c_end]);
    } catch (const ParseError& pe) {
      throw ParseError(path, t.line_numbers[i], pe.what());
    }
    if (e.end_minute < e.start_minute) {
      throw ParseError(path, t.line_numbers[i],
                       "event '" + e.event_id + "' ends before it starts");
    }
    e.customers_affected = parse_int(t, i, c_cust);
    if (e.customers_affected < 1) {
      throw ParseError(path, t.line_numbers[i],
                       "event '" + e.event_id + "' has customers_affected < 1");
    }
    if (c_cause >= 0) e.cause = t.rows[i][c_cause];
    events.push_back(std::move(e));
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const OutageEvent& a, const OutageEvent& b) {
                     return a.start_minute < b.start_minute;
                   });
  return events;
}

SubstationRegistry load_registry(const std::string& path) {
  CsvTable t = read_csv(path);
  const int c_id = t.require_column("substation_id");
  const int c_lon = t.require_column("lon");
  const int c_lat = t.require_column("lat");
  const int c_tot = t.require_column("customers_total");
  if (t.rows.empty()) throw ParseError(path + ": no substations");

  SubstationRegistry reg;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    SubstationRecord r;
    r.substation_id = t.rows[i][c_id];
    if (r.substation_id.empty()) throw ParseError(path, t.line_numbers[i], "empty substation_id");
    r.lon = parse_double(t, i, c_lon);
    r.lat = parse_double(t, i, c_lat);
    r.customers_total = parse_int(t, i, c_tot);
    try {
      reg.add(std::move(r));
    } catch (const ValidationError& ve) {
      throw ParseError(path, t.line_numbers[i], ve.what());
    }
  }
  return reg;
}

CovariatePanel load_covariates(const std::string& path) {
  CsvTable t = read_csv(path);
  const int c_sub = t.require_column("substation_id");
  const int c_month = t.require_column("month");

  std::vector<std::string> value_columns;
  std::vector<int> value_idx;
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (static_cast<int>(i) == c_sub || static_cast<int>(i) == c_month) continue;
    value_columns.push_back(t.columns[i]);
    value_idx.push_back(static_cast<int>(i));
  }

  CovariatePanel panel(value_columns);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    CovariatePanel::Row row;
    row.substation_id = t.rows[i][c_sub];
    try {
      row.month = YearMonth::parse(t.rows[i][c_month]);
    } catch (const ParseError& pe) {
      throw ParseError(path, t.line_numbers[i], pe.what());
    }
    row.values.reserve(value_idx.size());
    for (int col : value_idx) row.values.push_back(parse_double(t, i, col));
    try {
      panel.add_row(std::move(row));
    } catch (const ValidationError& ve) {
      throw ParseError(path, t.line_numbers[i], ve.what());
    }
  }
  return panel;
}

std::vector<InstallRecord> load_installs(const std::string& path) {
  CsvTable t = read_csv(path);
  const int c_hh = t.require_column("household_id");
  const int c_sub = t.require_column("substation_id");
  const int c_date = t.require_column("date");

  std::vector<InstallRecord> installs;
  installs.reserve(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    InstallRecord r;
    r.household_id = t.rows[i][c_hh];
    r.substation_id = t.rows[i][c_sub];
    try {
      r.date_days = parse_date(t.rows[i][c_date]);
    } catch (const ParseError& pe) {
      throw ParseError(path, t.line_numbers[i], pe.what());
    }
    installs.push_back(std::move(r));
  }
  return installs;
}

// ---------------------------------------------------------------- writers

namespace {

void write_comments(CsvWriter& w, std::span<const std::string> comments) {
  for (const auto& c : comments) w.comment(c);
}

} // namespace

void write_events(const std::string& path, std::span<const OutageEvent> events,
                  std::span<const std::string> header_comments) {
  CsvWriter w(path);
  write_comments(w, header_comments);
  const std::string cols[] = {"event_id", "substation_id", "start",
                              "end",      "customers_affected", "cause"};
  w.header(cols);
  for (const auto& e : events) {
    const std::string cells[] = {e.event_id,
                                 e.substation_id,
                                 format_timestamp_minutes(e.start_minute),
                                 format_timestamp_minutes(e.end_minute),
                                 std::to_string(e.customers_affected),
                                 e.cause};
    w.row(cells);
  }
  w.close();
}

void write_registry(const std::string& path, const SubstationRegistry& registry,
                    std::span<const std::string> header_comments) {
  CsvWriter w(path);
  write_comments(w, header_comments);
  const std::string cols[] = {"substation_id", "lon", "lat", "customers_total"};
  w.header(cols);
  for (const auto& r : registry.records()) {
    const std::string cells[] = {r.substation_id, format_number(r.lon), format_number(r.lat),
                                 std::to_string(r.customers_total)};
    w.row(cells);
  }
  w.close();
}

void write_covariates(const std::string& path, const CovariatePanel& panel,
                      std::span<const std::string> header_comments) {
  CsvWriter w(path);
  write_comments(w, header_comments);
  std::vector<std::string> cols = {"substation_id", "month"};
  cols.insert(cols.end(), panel.columns().begin(), panel.columns().end());
  w.header(cols);
  std::vector<std::string> cells;
  for (const auto& row : panel.rows()) {
    cells.clear();
    cells.push_back(row.substation_id);
    cells.push_back(row.month.str());
    for (double v : row.values) cells.push_back(format_number(v));
    w.row(cells);
  }
  w.close();
}

void write_installs(const std::string& path, std::span<const InstallRecord> installs,
                    std::span<const std::string> header_comments) {
  CsvWriter w(path);
  write_comments(w, header_comments);
  const std::string cols[] = {"household_id", "substation_id", "date"};
  w.header(cols);
  for (const auto& r : installs) {
    const std::string cells[] = {r.household_id, r.substation_id, format_date(r.date_days)};
    w.row(cells);
  }
  w.close();
}

// ------------------------------------------------------------- assembly

CovariatePanel assemble_panel(std::span<const OutageEvent> events,
                              const SubstationRegistry& registry,
                              const CovariatePanel& covariates,
                              std::span<const InstallRecord> installs, MonthRange window) {
  if (window.empty()) throw ValidationError("empty month window");

  std::vector<std::string> columns = covariates.columns();
  const int n_cov = static_cast<int>(columns.size());
  columns.push_back(kColEventCount);
  columns.push_back(kColCustomerMinutes);
  columns.push_back(kColCustomersInterrupted);
  columns.push_back(kColInstalls);

  // Deterministic row order: substation id lexicographic, then month.
  std::vector<std::string> subs;
  subs.reserve(registry.size());
  for (const auto& r : registry.records()) subs.push_back(r.substation_id);
  std::sort(subs.begin(), subs.end());

  CovariatePanel out(columns);
  for (const auto& sub : subs) {
    for (int mi = window.first.index(); mi <= window.last.index(); ++mi) {
      const YearMonth month = YearMonth::from_index(mi);
      const CovariatePanel::Row* cov = covariates.find(sub, month);
      if (!cov && n_cov > 0) {
        throw ValidationError("missing covariate row (" + sub + ", " + month.str() + ")");
      }
      CovariatePanel::Row row;
      row.substation_id = sub;
      row.month = month;
      if (cov) row.values = cov->values;
      row.values.resize(columns.size(), 0.0);
      out.add_row(std::move(row));
    }
  }

  const int c_events = out.require_column(kColEventCount);
  const int c_minutes = out.require_column(kColCustomerMinutes);
  const int c_customers = out.require_column(kColCustomersInterrupted);
  const int c_installs = out.require_column(kColInstalls);

  for (const auto& e : events) {
    if (!registry.contains(e.substation_id)) {
      throw ValidationError("event '" + e.event_id + "' references unknown substation '" +
                            e.substation_id + "'");
    }
    const YearMonth m = e.start_month();
    if (!window.contains(m)) continue;
    auto* row = out.find(e.substation_id, m);
    row->values[c_events] += 1.0;
    row->values[c_minutes] += e.duration_minutes() * static_cast<double>(e.customers_affected);
    row->values[c_customers] += static_cast<double>(e.customers_affected);
  }

  for (const auto& r : installs) {
    if (!registry.contains(r.substation_id)) {
      throw ValidationError("install for household '" + r.household_id +
                            "' references unknown substation '" + r.substation_id + "'");
    }
    const YearMonth m = r.month();
    if (!window.contains(m)) continue;
    out.find(r.substation_id, m)->values[c_installs] += 1.0;
  }

  return out;
}

} // namespace gridcast
