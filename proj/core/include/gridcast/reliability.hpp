#pragma once

#include <optional>
#include <span>
#include <vector>

#include "gridcast/ingest.hpp"

namespace gridcast {

/// Event contribution used by the index formulas: duration in minutes and
/// customers affected. Simulated events carry fractional mark
/// representatives, so both are doubles.
struct EventWeight {
  double duration_minutes = 0.0;
  double customers = 0.0;
};

/// Total interruption minutes per served customer: sum of duration x
/// customers over events, divided by customers_total. Major-event days are
/// included (no exclusion variant).
double compute_saidi(std::span<const EventWeight> events, double customers_total);
double compute_saidi(std::span<const OutageEvent> events, std::int64_t customers_total);

/// Interruptions per served customer: sum of customers affected divided by
/// customers_total.
double compute_saifi(std::span<const EventWeight> events, double customers_total);
double compute_saifi(std::span<const OutageEvent> events, std::int64_t customers_total);

/// saidi/saifi. Both zero -> 0 by convention; saifi == 0 with saidi > 0 is
/// undefined and throws.
double compute_caidi(double saidi, double saifi);

/// Keeps events with duration >= min_duration_minutes.
std::vector<OutageEvent> filter_events(std::span<const OutageEvent> events,
                                       double min_duration_minutes);

/// Trailing h-term sums. Positions with fewer than h predecessors are
/// unavailable (nullopt) and are dropped from estimation downstream.
std::vector<std::optional<double>> rolling_sum(std::span<const double> series, int h);

/// Daily maximum gust speeds for one substation, as a contiguous series.
struct DailyGustSeries {
  std::int64_t first_day = 0; // days since epoch
  std::vector<double> values; // one per day

  std::int64_t last_day() const {
    return first_day + static_cast<std::int64_t>(values.size()) - 1;
  }
};

/// Sum of daily maximum gusts over the h-calendar-month window ending at
/// `end_month` (inclusive). Throws when the series does not cover every day
/// of the window. Unit: m/s * days.
double gust_exposure(const DailyGustSeries& series, YearMonth end_month, int h_months);

/// New installations over a window divided by households served.
double adoption_rate(std::int64_t installs, std::int64_t customers_total);

struct ReliabilityPanelOptions {
  double min_duration_minutes = 0.0;      // event filter before index computation
  std::vector<int> horizons = {3, 6, 9, 12};
  std::string gust_column = "gust";       // monthly sum of daily max gusts
  int adoption_window_months = 3;
};

/// Substation x month reliability panel. Cells for months with fewer
/// predecessors than a rolling horizon are NaN and are written as empty CSV
/// cells. Covariate columns are passed through verbatim.
struct ReliabilityPanel {
  std::vector<std::string> columns; // substation_id/month excluded
  struct Row {
    std::string substation_id;
    YearMonth month;
    std::vector<double> values;
  };
  std::vector<Row> rows;

  int column_index(const std::string& name) const;
  int require_column(const std::string& name) const;
};

/// Builds the full panel: monthly saidi/saifi/caidi from events (attributed
/// to their start month), rolling sums s{h}/f{h}, rolling gust exposure
/// g{h} from the monthly gust column, the trailing install count and the
/// adoption rate Y, plus all covariate columns.
ReliabilityPanel build_reliability_panel(std::span<const OutageEvent> events,
                                         const SubstationRegistry& registry,
                                         const CovariatePanel& covariates,
                                         std::span<const InstallRecord> installs,
                                         MonthRange window,
                                         const ReliabilityPanelOptions& options = {});

void write_reliability_panel(const std::string& path, const ReliabilityPanel& panel,
                             std::span<const std::string> header_comments = {});
ReliabilityPanel load_reliability_panel(const std::string& path);

} // namespace gridcast
