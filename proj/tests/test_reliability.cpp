#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "gridcast/error.hpp"
#include "gridcast/reliability.hpp"
#include "gridcast/rng.hpp"

using namespace gridcast;

namespace {

OutageEvent make_event(const std::string& id, const std::string& sub, YearMonth month,
                       std::int64_t offset_min, std::int64_t duration_min,
                       std::int64_t customers) {
  OutageEvent e;
  e.event_id = id;
  e.substation_id = sub;
  e.start_minute = month_start_minutes(month) + offset_min;
  e.end_minute = e.start_minute + duration_min;
  e.customers_affected = customers;
  return e;
}

// Independent term-by-term reference for the index formulas, kept free of
// the production accumulation code.
double brute_saidi(const std::vector<OutageEvent>& events, std::int64_t n_total) {
  double acc = 0.0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const double minutes = static_cast<double>(events[i].end_minute - events[i].start_minute);
    acc += minutes * static_cast<double>(events[i].customers_affected);
  }
  return acc / static_cast<double>(n_total);
}

double brute_saifi(const std::vector<OutageEvent>& events, std::int64_t n_total) {
  double acc = 0.0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    acc += static_cast<double>(events[i].customers_affected);
  }
  return acc / static_cast<double>(n_total);
}

} // namespace

TEST_CASE("saidi on the worked examples") {
  const YearMonth m{2014, 1};
  std::vector<OutageEvent> one{make_event("E1", "S", m, 0, 60, 50)};
  CHECK(compute_saidi(one, 100) == 30.0);
  CHECK(compute_saidi(std::vector<OutageEvent>{}, 100) == 0.0);
  std::vector<OutageEvent> two{make_event("E1", "S", m, 0, 60, 50),
                               make_event("E2", "S", m, 5000, 120, 10)};
  CHECK(compute_saidi(two, 100) == 42.0); // (3000 + 1200) / 100
  CHECK_THROWS_AS(compute_saidi(one, 0), ValidationError);
}

TEST_CASE("saifi on the worked examples") {
  const YearMonth m{2014, 1};
  std::vector<OutageEvent> one{make_event("E1", "S", m, 0, 60, 50)};
  CHECK(compute_saifi(one, 100) == 0.5);
  CHECK(compute_saifi(std::vector<OutageEvent>{}, 100) == 0.0);
  std::vector<OutageEvent> two{make_event("E1", "S", m, 0, 60, 50),
                               make_event("E2", "S", m, 5000, 120, 100)};
  CHECK(compute_saifi(two, 100) == 1.5);
}

TEST_CASE("caidi ratio and conventions") {
  CHECK(compute_caidi(30.0, 0.5) == 60.0);
  CHECK(compute_caidi(0.0, 0.0) == 0.0);
  CHECK_THROWS_AS(compute_caidi(10.0, 0.0), ValidationError);
  CHECK_THROWS_AS(compute_caidi(1.0, -0.1), ValidationError);
}

TEST_CASE("filter_events thresholds by duration") {
  const YearMonth m{2014, 1};
  std::vector<OutageEvent> events{make_event("A", "S", m, 0, 30, 1),
                                  make_event("B", "S", m, 100, 90, 1)};
  const auto kept = filter_events(events, 60.0);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].event_id == "B");
  CHECK(filter_events(events, 0.0).size() == 2);
  CHECK(filter_events(events, 1000.0).empty());
  CHECK_THROWS_AS(filter_events(events, -1.0), ValidationError);
}

TEST_CASE("rolling_sum windows") {
  const std::vector<double> xs{1, 2, 3, 4};
  const auto r3 = rolling_sum(xs, 3);
  REQUIRE(r3.size() == 4);
  CHECK_FALSE(r3[0].has_value());
  CHECK_FALSE(r3[1].has_value());
  CHECK(*r3[2] == 6.0);
  CHECK(*r3[3] == 9.0);

  const auto r1 = rolling_sum(xs, 1);
  for (std::size_t i = 0; i < xs.size(); ++i) CHECK(*r1[i] == xs[i]);

  const std::vector<double> zeros(6, 0.0);
  for (const auto& v : rolling_sum(zeros, 3)) {
    if (v) CHECK(*v == 0.0);
  }
  CHECK_THROWS_AS(rolling_sum(xs, 5), ValidationError);
  CHECK_THROWS_AS(rolling_sum(xs, 0), ValidationError);
}

TEST_CASE("gust exposure sums daily maxima over calendar windows") {
  const YearMonth jan{2020, 1};
  DailyGustSeries series;
  series.first_day = month_start_day(jan);
  series.values.assign(31, 0.0);
  series.values[0] = 10.0;
  series.values[1] = 20.0;
  series.values[2] = 30.0;
  CHECK(gust_exposure(series, jan, 1) == 60.0);

  SUBCASE("constant gust is linear in the day count") {
    DailyGustSeries c;
    c.first_day = month_start_day(YearMonth{2021, 4});
    c.values.assign(30, 5.0);
    CHECK(gust_exposure(c, YearMonth{2021, 4}, 1) == 150.0);
  }
  SUBCASE("all-zero series sums to zero") {
    DailyGustSeries z;
    z.first_day = month_start_day(jan);
    z.values.assign(31, 0.0);
    CHECK(gust_exposure(z, jan, 1) == 0.0);
  }
  SUBCASE("missing days are an error") {
    CHECK_THROWS_WITH_AS(gust_exposure(series, jan, 2), doctest::Contains("cover"),
                         ValidationError);
    CHECK_THROWS_AS(gust_exposure(series, YearMonth{2020, 2}, 1), ValidationError);
  }
}

TEST_CASE("adoption_rate matches the reported scale") {
  CHECK(adoption_rate(2, 10000) == 0.0002);
  CHECK(adoption_rate(0, 10000) == 0.0);
  const double r = adoption_rate(18, 8600);
  CHECK(r == doctest::Approx(0.00209).epsilon(1e-3));
  CHECK(r < 0.009);
  CHECK_THROWS_AS(adoption_rate(1, 0), ValidationError);
}

TEST_CASE("saidi additivity over event partitions") {
  Rng rng(17);
  const YearMonth m{2014, 3};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<OutageEvent> all, part_a, part_b;
    const int n = 1 + static_cast<int>(rng.integer(30));
    for (int i = 0; i < n; ++i) {
      auto e = make_event("E" + std::to_string(i), "S", m,
                          static_cast<std::int64_t>(rng.integer(40000)),
                          static_cast<std::int64_t>(rng.integer(300)),
                          1 + static_cast<std::int64_t>(rng.integer(500)));
      all.push_back(e);
      (rng.uniform01() < 0.5 ? part_a : part_b).push_back(e);
    }
    const double whole = compute_saidi(all, 1000);
    const double split = compute_saidi(part_a, 1000) + compute_saidi(part_b, 1000);
    CHECK(whole == doctest::Approx(split).epsilon(1e-12));
  }
}

TEST_CASE("raising the duration filter never increases the indices") {
  Rng rng(23);
  const YearMonth m{2014, 3};
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<OutageEvent> events;
    const int n = 1 + static_cast<int>(rng.integer(40));
    for (int i = 0; i < n; ++i) {
      events.push_back(make_event("E" + std::to_string(i), "S", m,
                                  static_cast<std::int64_t>(rng.integer(40000)),
                                  static_cast<std::int64_t>(rng.integer(240)),
                                  1 + static_cast<std::int64_t>(rng.integer(100))));
    }
    double prev_saidi = compute_saidi(events, 500);
    double prev_saifi = compute_saifi(events, 500);
    for (double cut : {15.0, 60.0, 120.0, 240.0}) {
      const auto kept = filter_events(events, cut);
      const double s = compute_saidi(kept, 500);
      const double f = compute_saifi(kept, 500);
      CHECK(s <= prev_saidi);
      CHECK(f <= prev_saifi);
      prev_saidi = s;
      prev_saifi = f;
    }
  }
}

TEST_CASE("indices match the brute-force oracle exactly") {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = static_cast<int>(rng.integer(50));
    const std::int64_t n_total = 50 + static_cast<std::int64_t>(rng.integer(10000));
    std::vector<OutageEvent> events;
    for (int i = 0; i < n; ++i) {
      events.push_back(make_event("E" + std::to_string(i), "S", YearMonth{2015, 2},
                                  static_cast<std::int64_t>(rng.integer(40000)),
                                  static_cast<std::int64_t>(rng.integer(600)),
                                  1 + static_cast<std::int64_t>(rng.integer(2000))));
    }
    const double saidi = compute_saidi(events, n_total);
    const double saifi = compute_saifi(events, n_total);
    CHECK(saidi == brute_saidi(events, n_total));
    CHECK(saifi == brute_saifi(events, n_total));
    if (saifi > 0.0) {
      const double caidi = compute_caidi(saidi, saifi);
      CHECK(std::abs(caidi * saifi - saidi) <= 1e-12 * std::max(1.0, std::abs(saidi)));
    }
  }
}

TEST_CASE("reliability panel end to end on a small fixture") {
  SubstationRegistry reg;
  reg.add({"A", 0.0, 0.0, 100});
  reg.add({"B", 0.1, 0.0, 400});
  const MonthRange window{YearMonth{2014, 1}, YearMonth{2014, 5}};

  CovariatePanel cov({"gust", "price"});
  for (const auto& sub : {"A", "B"}) {
    for (int i = 0; i < 5; ++i) {
      CovariatePanel::Row row;
      row.substation_id = sub;
      row.month = YearMonth::from_index(window.first.index() + i);
      row.values = {10.0 * (i + 1), 0.12};
      cov.add_row(std::move(row));
    }
  }

  std::vector<OutageEvent> events{
      make_event("E1", "A", YearMonth{2014, 2}, 100, 60, 50),   // saidi 30 at (A, Feb)
      make_event("E2", "A", YearMonth{2014, 2}, 9000, 120, 10), // plus 12 -> 42
      make_event("E3", "B", YearMonth{2014, 4}, 50, 240, 400),
  };
  std::vector<InstallRecord> installs;
  for (int i = 0; i < 3; ++i) {
    InstallRecord r;
    r.household_id = "H" + std::to_string(i);
    r.substation_id = "A";
    r.date_days = month_start_day(YearMonth{2014, 3}) + i;
    installs.push_back(r);
  }

  const ReliabilityPanel panel = build_reliability_panel(events, reg, cov, installs, window);
  REQUIRE(panel.rows.size() == 10);
  const int c_saidi = panel.require_column("saidi");
  const int c_saifi = panel.require_column("saifi");
  const int c_caidi = panel.require_column("caidi");
  const int c_s3 = panel.require_column("s3");
  const int c_g3 = panel.require_column("g3");
  const int c_y = panel.require_column("Y");
  const int c_inst = panel.require_column("installs_3m");
  const int c_price = panel.require_column("price");

  auto row_of = [&](const std::string& sub, int month) -> const ReliabilityPanel::Row& {
    for (const auto& r : panel.rows) {
      if (r.substation_id == sub && r.month == YearMonth{2014, month}) return r;
    }
    FAIL("row not found");
    return panel.rows.front();
  };

  CHECK(row_of("A", 2).values[c_saidi] == 42.0);
  CHECK(row_of("A", 2).values[c_saifi] == 0.6);
  CHECK(row_of("A", 2).values[c_caidi] == 70.0);
  CHECK(row_of("A", 1).values[c_saidi] == 0.0);
  CHECK(row_of("B", 4).values[c_saidi] == 240.0);

  // Rolling windows: first two months unavailable, then trailing sums.
  CHECK(std::isnan(row_of("A", 1).values[c_s3]));
  CHECK(std::isnan(row_of("A", 2).values[c_s3]));
  CHECK(row_of("A", 3).values[c_s3] == 42.0);
  CHECK(row_of("A", 4).values[c_s3] == 42.0);
  CHECK(row_of("A", 5).values[c_s3] == 0.0);

  // Gust exposure is the 3-month rolling sum of the monthly column.
  CHECK(row_of("A", 3).values[c_g3] == 60.0);
  CHECK(row_of("A", 5).values[c_g3] == 120.0);

  // Adoption: three installs in March land in the 3-month windows of
  // March, April and May.
  CHECK(row_of("A", 3).values[c_inst] == 3.0);
  CHECK(row_of("A", 3).values[c_y] == 0.03);
  CHECK(row_of("A", 5).values[c_inst] == 3.0);
  CHECK(std::isnan(row_of("A", 2).values[c_y]));

  // Covariates pass through verbatim.
  CHECK(row_of("B", 1).values[c_price] == 0.12);

  // Round trip through CSV keeps NaN cells empty.
  const auto dir = std::filesystem::temp_directory_path() / "gridcast_rel_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "panel.csv").string();
  write_reliability_panel(path, panel);
  const ReliabilityPanel back = load_reliability_panel(path);
  REQUIRE(back.rows.size() == panel.rows.size());
  CHECK(back.columns == panel.columns);
  for (std::size_t i = 0; i < back.rows.size(); ++i) {
    for (std::size_t c = 0; c < back.columns.size(); ++c) {
      const double a = panel.rows[i].values[c];
      const double b = back.rows[i].values[c];
      if (std::isnan(a)) {
        CHECK(std::isnan(b));
      } else {
        CHECK(b == doctest::Approx(a).epsilon(1e-5));
      }
    }
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("event filter feeds the panel variants") {
  SubstationRegistry reg;
  reg.add({"A", 0.0, 0.0, 100});
  const MonthRange window{YearMonth{2014, 1}, YearMonth{2014, 3}};
  CovariatePanel cov(std::vector<std::string>{});
  for (int i = 0; i < 3; ++i) {
    CovariatePanel::Row row;
    row.substation_id = "A";
    row.month = YearMonth::from_index(window.first.index() + i);
    cov.add_row(std::move(row));
  }
  std::vector<OutageEvent> events{
      make_event("E1", "A", YearMonth{2014, 1}, 0, 30, 10),
      make_event("E2", "A", YearMonth{2014, 1}, 5000, 90, 10),
  };
  ReliabilityPanelOptions opts;
  opts.min_duration_minutes = 60.0;
  const auto panel = build_reliability_panel(events, reg, cov, {}, window, opts);
  const int c_saidi = panel.require_column("saidi");
  CHECK(panel.rows[0].values[c_saidi] == 9.0); // only the 90-minute event remains
}
