#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "gridcast/error.hpp"
#include "gridcast/ingest.hpp"
#include "gridcast/rng.hpp"
#include "gridcast/synth.hpp"

using namespace gridcast;

namespace {

std::filesystem::path tmp_dir() {
  auto d = std::filesystem::temp_directory_path() / "gridcast_ingest_test";
  std::filesystem::create_directories(d);
  return d;
}

std::string write_file(const std::string& name, const std::string& content) {
  const auto path = tmp_dir() / name;
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

CovariatePanel balanced_covariates(const std::vector<std::string>& subs, YearMonth first,
                                   int n_months, std::vector<std::string> cols = {}) {
  CovariatePanel p(cols);
  for (const auto& s : subs) {
    for (int i = 0; i < n_months; ++i) {
      CovariatePanel::Row row;
      row.substation_id = s;
      row.month = YearMonth::from_index(first.index() + i);
      row.values.assign(cols.size(), 1.0);
      p.add_row(std::move(row));
    }
  }
  return p;
}

} // namespace

TEST_CASE("load_events parses a valid single row") {
  const auto path = write_file("e1.csv",
                               "event_id,substation_id,start,end,customers_affected,cause\n"
                               "E1,S1,2014-01-05T10:00Z,2014-01-05T11:00Z,50,wind\n");
  const auto events = load_events(path);
  REQUIRE(events.size() == 1);
  CHECK(events[0].duration_minutes() == 60.0);
  CHECK(events[0].customers_affected == 50);
  CHECK(events[0].cause == "wind");
  CHECK(events[0].start_month() == YearMonth{2014, 1});
}

TEST_CASE("load_events rejects bad rows with the line number") {
  const char* header = "event_id,substation_id,start,end,customers_affected,cause\n";
  SUBCASE("end before start") {
    const auto path = write_file(
        "e2.csv", std::string(header) + "E1,S1,2014-01-05T11:00Z,2014-01-05T10:00Z,50,\n");
    CHECK_THROWS_WITH_AS(load_events(path), doctest::Contains(":2:"), ParseError);
  }
  SUBCASE("customers below one") {
    const auto path = write_file(
        "e3.csv", std::string(header) + "E1,S1,2014-01-05T10:00Z,2014-01-05T11:00Z,0,\n");
    CHECK_THROWS_AS(load_events(path), ParseError);
  }
  SUBCASE("duplicate event id") {
    const auto path = write_file(
        "e4.csv", std::string(header) +
                      "E1,S1,2014-01-05T10:00Z,2014-01-05T11:00Z,5,\n"
                      "E1,S1,2014-01-06T10:00Z,2014-01-06T11:00Z,5,\n");
    CHECK_THROWS_WITH_AS(load_events(path), doctest::Contains(":3:"), ParseError);
  }
  SUBCASE("malformed timestamp") {
    const auto path =
        write_file("e5.csv", std::string(header) + "E1,S1,yesterday,2014-01-05T11:00Z,5,\n");
    CHECK_THROWS_AS(load_events(path), ParseError);
  }
}

TEST_CASE("load_events sorts by start time") {
  const auto path = write_file("e6.csv",
                               "event_id,substation_id,start,end,customers_affected,cause\n"
                               "E2,S1,2014-02-01T00:00Z,2014-02-01T01:00Z,5,\n"
                               "E1,S1,2014-01-01T00:00Z,2014-01-01T01:00Z,5,\n");
  const auto events = load_events(path);
  REQUIRE(events.size() == 2);
  CHECK(events[0].event_id == "E1");
}

TEST_CASE("registry of 44 substations totals the study population") {
  // 30 x 8585 + 14 x 8584 = 377,726 households across 44 substations.
  std::string content = "substation_id,lon,lat,customers_total\n";
  for (int i = 0; i < 44; ++i) {
    content += "S" + std::to_string(i) + ",0.1," + std::to_string(0.01 * i) + "," +
               std::to_string(i < 30 ? 8585 : 8584) + "\n";
  }
  const auto reg = load_registry(write_file("r1.csv", content));
  CHECK(reg.size() == 44);
  CHECK(reg.total_customers() == 377726);
  CHECK(reg.at("S7").customers_total == 8585);
  CHECK(reg.index_of("missing") == -1);
}

TEST_CASE("registry error paths") {
  CHECK_THROWS_WITH_AS(
      load_registry(write_file("r2.csv", "substation_id,lon,lat,customers_total\n")),
      doctest::Contains("no substations"), ParseError);
  CHECK_THROWS_AS(load_registry(write_file(
                      "r3.csv", "substation_id,lon,lat,customers_total\nS1,0,0,10\nS1,0,0,10\n")),
                  ParseError);
  CHECK_THROWS_AS(load_registry(write_file(
                      "r4.csv", "substation_id,lon,lat,customers_total\nS1,0,0,0\n")),
                  ParseError);
}

TEST_CASE("synthetic events round-trip through write and load") {
  HawkesDgpSpec spec;
  spec.n_sub = 5;
  spec.mu = 0.6;
  spec.alpha = 0.3;
  spec.horizon_days = 400.0; // about 1,000 events
  const HawkesDataset ds = gen_hawkes_dataset(spec, 77);
  REQUIRE(ds.events.size() > 800);

  const auto dir = tmp_dir();
  const std::string p1 = (dir / "round1.csv").string();
  write_events(p1, ds.events);
  const auto loaded = load_events(p1);
  REQUIRE(loaded.size() == ds.events.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].event_id == ds.events[i].event_id);
    CHECK(loaded[i].substation_id == ds.events[i].substation_id);
    CHECK(loaded[i].start_minute == ds.events[i].start_minute);
    CHECK(loaded[i].end_minute == ds.events[i].end_minute);
    CHECK(loaded[i].customers_affected == ds.events[i].customers_affected);
    CHECK(loaded[i].cause == ds.events[i].cause);
  }
  // write(load(f)) reproduces the file byte for byte.
  const std::string p2 = (dir / "round2.csv").string();
  write_events(p2, loaded);
  CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("covariate loader preserves unknown columns verbatim") {
  const auto path = write_file("c1.csv",
                               "substation_id,month,gust,mystery_metric\n"
                               "S1,2014-01,12.5,7\n"
                               "S1,2014-02,3.25,-1.5\n");
  const auto cov = load_covariates(path);
  REQUIRE(cov.columns().size() == 2);
  CHECK(cov.columns()[1] == "mystery_metric");
  CHECK(cov.value("S1", YearMonth{2014, 2}, 1) == -1.5);

  const auto out = (tmp_dir() / "c1_out.csv").string();
  write_covariates(out, cov);
  const auto back = load_covariates(out);
  CHECK(back.columns() == cov.columns());
  CHECK(back.value("S1", YearMonth{2014, 1}, 0) == 12.5);
}

TEST_CASE("covariate loader rejects missing and duplicate cells") {
  CHECK_THROWS_AS(
      load_covariates(write_file("c2.csv", "substation_id,month,gust\nS1,2014-01,\n")),
      ParseError);
  CHECK_THROWS_AS(load_covariates(write_file("c3.csv",
                                             "substation_id,month,gust\n"
                                             "S1,2014-01,1\nS1,2014-01,2\n")),
                  ParseError);
}

TEST_CASE("assemble_panel builds a balanced zero-filled grid") {
  SubstationRegistry reg;
  reg.add({"A", 0.0, 0.0, 100});
  reg.add({"B", 0.1, 0.0, 200});
  const MonthRange window{YearMonth{2014, 1}, YearMonth{2014, 3}};
  const auto cov = balanced_covariates({"A", "B"}, window.first, 3);

  SUBCASE("no events gives six all-zero rows") {
    const auto panel = assemble_panel({}, reg, cov, {}, window);
    CHECK(panel.rows().size() == 6);
    const int c = panel.require_column(kColEventCount);
    for (const auto& row : panel.rows()) CHECK(row.values[c] == 0.0);
  }

  SUBCASE("one event lands in its start month only") {
    OutageEvent e;
    e.event_id = "E1";
    e.substation_id = "A";
    e.start_minute = month_start_minutes(YearMonth{2014, 2}) + 600;
    e.end_minute = e.start_minute + 90;
    e.customers_affected = 10;
    const std::vector<OutageEvent> events{e};
    const auto panel = assemble_panel(events, reg, cov, {}, window);
    const int c_n = panel.require_column(kColEventCount);
    const int c_m = panel.require_column(kColCustomerMinutes);
    for (const auto& row : panel.rows()) {
      if (row.substation_id == "A" && row.month == YearMonth{2014, 2}) {
        CHECK(row.values[c_n] == 1.0);
        CHECK(row.values[c_m] == 900.0);
      } else {
        CHECK(row.values[c_n] == 0.0);
        CHECK(row.values[c_m] == 0.0);
      }
    }
  }

  SUBCASE("unknown substation is an error") {
    OutageEvent e;
    e.event_id = "E1";
    e.substation_id = "ZZ";
    e.start_minute = month_start_minutes(YearMonth{2014, 1});
    e.end_minute = e.start_minute + 5;
    e.customers_affected = 1;
    const std::vector<OutageEvent> events{e};
    CHECK_THROWS_WITH_AS(assemble_panel(events, reg, cov, {}, window),
                         doctest::Contains("unknown substation"), ValidationError);
  }

  SUBCASE("empty window is an error") {
    CHECK_THROWS_AS(
        assemble_panel({}, reg, cov, {}, MonthRange{YearMonth{2014, 3}, YearMonth{2014, 1}}),
        ValidationError);
  }

  SUBCASE("missing covariate cell is a hard error") {
    CovariatePanel partial({"gust"});
    CovariatePanel::Row row;
    row.substation_id = "A";
    row.month = YearMonth{2014, 1};
    row.values = {1.0};
    partial.add_row(std::move(row));
    CHECK_THROWS_WITH_AS(assemble_panel({}, reg, partial, {}, window),
                         doctest::Contains("missing covariate"), ValidationError);
  }
}

TEST_CASE("assemble_panel row count and install totals on random inputs") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const int n_sub = 1 + static_cast<int>(rng.integer(5));
    const int n_months = 1 + static_cast<int>(rng.integer(10));
    SubstationRegistry reg;
    std::vector<std::string> subs;
    for (int s = 0; s < n_sub; ++s) {
      const std::string id = "S" + std::to_string(s);
      reg.add({id, 0.01 * s, 0.0, 50});
      subs.push_back(id);
    }
    const MonthRange window{YearMonth{2015, 1},
                            YearMonth::from_index(YearMonth{2015, 1}.index() + n_months - 1)};
    const auto cov = balanced_covariates(subs, window.first, n_months);

    std::vector<InstallRecord> installs;
    int inside = 0;
    const int n_installs = static_cast<int>(rng.integer(30));
    for (int i = 0; i < n_installs; ++i) {
      InstallRecord r;
      r.household_id = "H" + std::to_string(i);
      r.substation_id = subs[rng.integer(subs.size())];
      // Some dates deliberately before and after the window.
      const int m = static_cast<int>(rng.integer(n_months + 4)) - 2;
      r.date_days = month_start_day(YearMonth::from_index(window.first.index() + m)) +
                    static_cast<std::int64_t>(rng.integer(28));
      if (m >= 0 && m < n_months) ++inside;
      installs.push_back(r);
    }

    const auto panel = assemble_panel({}, reg, cov, installs, window);
    CHECK(panel.rows().size() == static_cast<std::size_t>(n_sub) * n_months);
    const int c_inst = panel.require_column(kColInstalls);
    double total = 0.0;
    for (const auto& row : panel.rows()) total += row.values[c_inst];
    CHECK(total == static_cast<double>(inside));
  }
}

TEST_CASE("install loader validates dates") {
  const auto path = write_file("i1.csv",
                               "household_id,substation_id,date\n"
                               "H1,S1,2014-02-30\n");
  CHECK_THROWS_AS(load_installs(path), ParseError);
  const auto ok = load_installs(write_file("i2.csv",
                                           "household_id,substation_id,date\n"
                                           "H1,S1,2014-02-28\n"));
  REQUIRE(ok.size() == 1);
  CHECK(ok[0].month() == YearMonth{2014, 2});
}
