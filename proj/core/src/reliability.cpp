#include "gridcast/reliability.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "gridcast/csv.hpp"
#include "gridcast/error.hpp"

namespace gridcast {

double compute_saidi(std::span<const EventWeight> events, double customers_total) {
  if (customers_total < 1.0) throw ValidationError("customers_total < 1");
  double sum = 0.0;
  for (const auto& e : events) sum += e.duration_minutes * e.customers;
  return sum / customers_total;
}

double compute_saidi(std::span<const OutageEvent> events, std::int64_t customers_total) {
  if (customers_total < 1) throw ValidationError("customers_total < 1");
  double sum = 0.0;
  for (const auto& e : events) {
    sum += e.duration_minutes() * static_cast<double>(e.customers_affected);
  }
  return sum / static_cast<double>(customers_total);
}

double compute_saifi(std::span<const EventWeight> events, double customers_total) {
  if (customers_total < 1.0) throw ValidationError("customers_total < 1");
  double sum = 0.0;
  for (const auto& e : events) sum += e.customers;
  return sum / customers_total;
}

double compute_saifi(std::span<const OutageEvent> events, std::int64_t customers_total) {
  if (customers_total < 1) throw ValidationError("customers_total < 1");
  double sum = 0.0;
  for (const auto& e : events) sum += static_cast<double>(e.customers_affected);
  return sum / static_cast<double>(customers_total);
}

double compute_caidi(double saidi, double saifi) {
  if (saifi < 0.0) throw ValidationError("saifi < 0");
  if (saifi == 0.0) {
    if (saidi == 0.0) return 0.0;
    throw ValidationError("caidi undefined: saifi = 0 with saidi > 0");
  }
  return saidi / saifi;
}

std::vector<OutageEvent> filter_events(std::span<const OutageEvent> events,
                                       double min_duration_minutes) {
  if (min_duration_minutes < 0.0) throw ValidationError("min_duration < 0");
  std::vector<OutageEvent> out;
  out.reserve(events.size());
  for (const auto& e : events) {
    if (e.duration_minutes() >= min_duration_minutes) out.push_back(e);
  }
  return out;
}

std::vector<std::optional<double>> rolling_sum(std::span<const double> series, int h) {
  if (h < 1) throw ValidationError("rolling window h must be >= 1");
  if (static_cast<std::size_t>(h) > series.size()) {
    throw ValidationError("rolling window h = " + std::to_string(h) +
                          " exceeds series length " + std::to_string(series.size()));
  }
  std::vector<std::optional<double>> out(series.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    acc += series[i];
    if (i >= static_cast<std::size_t>(h)) acc -= series[i - h];
    if (i + 1 >= static_cast<std::size_t>(h)) out[i] = acc;
  }
  return out;
}

double gust_exposure(const DailyGustSeries& series, YearMonth end_month, int h_months) {
  if (h_months < 1) throw ValidationError("gust window must span at least 1 month");
  const YearMonth first_month = YearMonth::from_index(end_month.index() - h_months + 1);
  const std::int64_t day_lo = month_start_day(first_month);
  const std::int64_t day_hi = month_start_day(end_month.next()); // exclusive
  if (day_lo == day_hi) return 0.0;
  if (day_lo < series.first_day || day_hi - 1 > series.last_day()) {
    throw ValidationError("gust series does not cover window " + first_month.str() + ".." +
                          end_month.str());
  }
  double sum = 0.0;
  for (std::int64_t d = day_lo; d < day_hi; ++d) {
    sum += series.values[static_cast<std::size_t>(d - series.first_day)];
  }
  return sum;
}

double adoption_rate(std::int64_t installs, std::int64_t customers_total) {
  if (customers_total < 1) throw ValidationError("customers_total < 1");
  return static_cast<double>(installs) / static_cast<double>(customers_total);
}

// ------------------------------------------------------------------ panel

int ReliabilityPanel::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<int>(i);
  }
  return -1;
}

int ReliabilityPanel::require_column(const std::string& name) const {
  int idx = column_index(name);
  if (idx < 0) throw ValidationError("reliability panel is missing column '" + name + "'");
  return idx;
}

ReliabilityPanel build_reliability_panel(std::span<const OutageEvent> events,
                                         const SubstationRegistry& registry,
                                         const CovariatePanel& covariates,
                                         std::span<const InstallRecord> installs,
                                         MonthRange window,
                                         const ReliabilityPanelOptions& options) {
  const std::vector<OutageEvent> kept = filter_events(events, options.min_duration_minutes);
  const CovariatePanel grid = assemble_panel(kept, registry, covariates, installs, window);

  const int n_months = window.count();
  const int c_installs = grid.require_column(kColInstalls);

  // Events grouped per (substation, month offset), using start-month
  // attribution to match assemble_panel.
  std::map<std::pair<std::string, int>, std::vector<OutageEvent>> grouped;
  for (const auto& e : kept) {
    const YearMonth m = e.start_month();
    if (!window.contains(m)) continue;
    grouped[{e.substation_id, m.index() - window.first.index()}].push_back(e);
  }

  const int gust_col = covariates.column_index(options.gust_column);
  const bool has_gust = gust_col >= 0;

  ReliabilityPanel out;
  out.columns = {"saidi", "saifi", "caidi"};
  for (int h : options.horizons) out.columns.push_back("s" + std::to_string(h));
  for (int h : options.horizons) out.columns.push_back("f" + std::to_string(h));
  if (has_gust) {
    for (int h : options.horizons) out.columns.push_back("g" + std::to_string(h));
  }
  out.columns.push_back("installs_3m");
  out.columns.push_back("Y");
  const std::size_t first_cov = out.columns.size();
  for (const auto& c : covariates.columns()) out.columns.push_back(c);

  std::vector<std::string> subs;
  for (const auto& r : registry.records()) subs.push_back(r.substation_id);
  std::sort(subs.begin(), subs.end());

  for (const auto& sub : subs) {
    const std::int64_t n_total = registry.at(sub).customers_total;
    std::vector<double> saidi(n_months), saifi(n_months), caidi(n_months);
    std::vector<double> installs_m(n_months), gust_m(n_months, 0.0);
    for (int i = 0; i < n_months; ++i) {
      const YearMonth m = YearMonth::from_index(window.first.index() + i);
      auto it = grouped.find({sub, i});
      std::span<const OutageEvent> evs =
          it == grouped.end() ? std::span<const OutageEvent>{} : std::span<const OutageEvent>(it->second);
      saidi[i] = compute_saidi(evs, n_total);
      saifi[i] = compute_saifi(evs, n_total);
      caidi[i] = compute_caidi(saidi[i], saifi[i]);
      installs_m[i] = grid.value(sub, m, c_installs);
      if (has_gust) gust_m[i] = covariates.value(sub, m, gust_col);
    }

    std::map<int, std::vector<std::optional<double>>> s_roll, f_roll, g_roll;
    for (int h : options.horizons) {
      if (h <= n_months) {
        s_roll[h] = rolling_sum(saidi, h);
        f_roll[h] = rolling_sum(saifi, h);
        if (has_gust) g_roll[h] = rolling_sum(gust_m, h);
      } else {
        s_roll[h].assign(n_months, std::nullopt);
        f_roll[h].assign(n_months, std::nullopt);
        if (has_gust) g_roll[h].assign(n_months, std::nullopt);
      }
    }
    std::vector<std::optional<double>> inst_roll;
    if (options.adoption_window_months <= n_months) {
      inst_roll = rolling_sum(installs_m, options.adoption_window_months);
    } else {
      inst_roll.assign(n_months, std::nullopt);
    }

    const double nan = std::nan("");
    for (int i = 0; i < n_months; ++i) {
      const YearMonth m = YearMonth::from_index(window.first.index() + i);
      ReliabilityPanel::Row row;
      row.substation_id = sub;
      row.month = m;
      row.values = {saidi[i], saifi[i], caidi[i]};
      for (int h : options.horizons) row.values.push_back(s_roll[h][i].value_or(nan));
      for (int h : options.horizons) row.values.push_back(f_roll[h][i].value_or(nan));
      if (has_gust) {
        for (int h : options.horizons) row.values.push_back(g_roll[h][i].value_or(nan));
      }
      if (inst_roll[i]) {
        const double n3 = *inst_roll[i];
        row.values.push_back(n3);
        row.values.push_back(n3 / static_cast<double>(n_total));
      } else {
        row.values.push_back(nan);
        row.values.push_back(nan);
      }
      const CovariatePanel::Row* cov = grid.find(sub, m);
      for (std::size_t c = 0; c < covariates.columns().size(); ++c) {
        row.values.push_back(cov->values[c]);
      }
      (void)first_cov;
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

void write_reliability_panel(const std::string& path, const ReliabilityPanel& panel,
                             std::span<const std::string> header_comments) {
  CsvWriter w(path);
  for (const auto& c : header_comments) w.comment(c);
  std::vector<std::string> cols = {"substation_id", "month"};
  cols.insert(cols.end(), panel.columns.begin(), panel.columns.end());
  w.header(cols);
  std::vector<std::string> cells;
  for (const auto& row : panel.rows) {
    cells.clear();
    cells.push_back(row.substation_id);
    cells.push_back(row.month.str());
    for (double v : row.values) cells.push_back(format_number(v)); // NaN -> ""
    w.row(cells);
  }
  w.close();
}

ReliabilityPanel load_reliability_panel(const std::string& path) {
  CsvTable t = read_csv(path);
  const int c_sub = t.require_column("substation_id");
  const int c_month = t.require_column("month");
  ReliabilityPanel panel;
  std::vector<int> value_idx;
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (static_cast<int>(i) == c_sub || static_cast<int>(i) == c_month) continue;
    panel.columns.push_back(t.columns[i]);
    value_idx.push_back(static_cast<int>(i));
  }
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    ReliabilityPanel::Row row;
    row.substation_id = t.rows[i][c_sub];
    try {
      row.month = YearMonth::parse(t.rows[i][c_month]);
    } catch (const ParseError& pe) {
      throw ParseError(path, t.line_numbers[i], pe.what());
    }
    for (int col : value_idx) {
      const std::string& s = t.rows[i][col];
      if (s.empty()) {
        row.values.push_back(std::nan(""));
        continue;
      }
      char* end = nullptr;
      double v = std::strtod(s.c_str(), &end);
      if (end != s.c_str() + s.size()) {
        throw ParseError(path, t.line_numbers[i], "invalid numeric value '" + s + "'");
      }
      row.values.push_back(v);
    }
    panel.rows.push_back(std::move(row));
  }
  return panel;
}

} // namespace gridcast
