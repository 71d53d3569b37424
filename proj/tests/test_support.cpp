#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "gridcast/csv.hpp"
#include "gridcast/error.hpp"
#include "gridcast/report.hpp"
#include "gridcast/rng.hpp"
#include "gridcast/stats.hpp"
#include "gridcast/timeutil.hpp"

using namespace gridcast;

TEST_CASE("civil date round trip") {
  for (std::int64_t day : {-1000, -1, 0, 1, 365, 59, 60, 18000, 25000}) {
    int y, m, d;
    civil_from_days(day, y, m, d);
    CHECK(days_from_civil(y, m, d) == day);
  }
  CHECK(days_from_civil(1970, 1, 1) == 0);
  CHECK(days_from_civil(2014, 1, 1) == 16071);
  CHECK(days_in_month(YearMonth{2020, 2}) == 29);
  CHECK(days_in_month(YearMonth{2021, 2}) == 28);
  CHECK(days_in_month(YearMonth{2023, 12}) == 31);
}

TEST_CASE("timestamp parse and format") {
  const std::int64_t t = parse_timestamp_minutes("2014-03-05T12:30Z");
  CHECK(format_timestamp_minutes(t) == "2014-03-05T12:30Z");
  CHECK(parse_timestamp_minutes("2014-03-05 12:30") == t);
  // Seconds truncate toward zero.
  CHECK(parse_timestamp_minutes("2014-03-05T12:30:59Z") == t);
  CHECK(month_of_minutes(t) == YearMonth{2014, 3});
  CHECK_THROWS_AS(parse_timestamp_minutes("2014-03-05"), ParseError);
  CHECK_THROWS_AS(parse_timestamp_minutes("2014-13-05T00:00Z"), ParseError);
  CHECK_THROWS_AS(parse_timestamp_minutes("2014-02-30T00:00Z"), ParseError);
}

TEST_CASE("year month arithmetic") {
  YearMonth m{2014, 12};
  CHECK(m.next() == YearMonth{2015, 1});
  CHECK(YearMonth::from_index(m.index()) == m);
  CHECK(YearMonth::parse("2019-07") == YearMonth{2019, 7});
  CHECK(YearMonth{2019, 7}.quarter_id() == 2019 * 4 + 2);
  CHECK_THROWS_AS(YearMonth::parse("2019-13"), ParseError);
  MonthRange r{YearMonth{2014, 1}, YearMonth{2014, 12}};
  CHECK(r.count() == 12);
  CHECK(r.contains(YearMonth{2014, 6}));
  CHECK_FALSE(r.contains(YearMonth{2015, 1}));
}

TEST_CASE("csv round trip with quoting") {
  const std::string text =
      "# comment line\na,b,c\n1,\"x,y\",\"he said \"\"hi\"\"\"\n2,,plain\n";
  const CsvTable t = read_csv_text(text, "mem");
  REQUIRE(t.columns.size() == 3);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][1] == "x,y");
  CHECK(t.rows[0][2] == "he said \"hi\"");
  CHECK(t.rows[1][1] == "");
  CHECK(csv_quote("x,y") == "\"x,y\"");
  CHECK(csv_quote("plain") == "plain");
  CHECK_THROWS_AS(read_csv_text("a,b\n1\n", "mem"), ParseError);
  CHECK_THROWS_AS(read_csv_text("", "mem"), ParseError);
}

TEST_CASE("number formatting is deterministic") {
  CHECK(format_number(0.0) == "0");
  CHECK(format_number(1.5) == "1.5");
  CHECK(format_number(0.0002) == "0.0002");
  CHECK(format_number(std::nan("")) == "");
  CHECK(format_number(1234567.0) == "1.23457e+06");
}

TEST_CASE("rng determinism and distribution sanity") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform01() == b.uniform01());
  CHECK(child_seed(1, 2) == child_seed(1, 2));
  CHECK(child_seed(1, 2) != child_seed(1, 3));
  CHECK(child_seed(1, 2) != child_seed(2, 2));

  Rng r(7);
  double acc = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) acc += r.exponential(2.0);
  CHECK(acc / n == doctest::Approx(0.5).epsilon(0.02));
  double m2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    m2 += z * z;
  }
  CHECK(m2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("ks test accepts exponential and rejects uniform") {
  Rng r(5);
  std::vector<double> exp_sample, unif_sample;
  for (int i = 0; i < 5000; ++i) {
    exp_sample.push_back(r.exponential(1.0));
    unif_sample.push_back(r.uniform01());
  }
  CHECK(ks_test_exp1(exp_sample).p_value > 0.01);
  CHECK(ks_test_exp1(unif_sample).p_value < 1e-6);
}

TEST_CASE("tail probabilities") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(normal_cdf(1.959963985) == doctest::Approx(0.975).epsilon(1e-6));
  CHECK(chi2_sf_1df(3.841458821) == doctest::Approx(0.05).epsilon(1e-6));
  CHECK(normal_pvalue(1.959963985) == doctest::Approx(0.05).epsilon(1e-6));
  CHECK(significance_stars(0.04) == std::string("*"));
  CHECK(significance_stars(0.2) == std::string(""));
}

TEST_CASE("report formats carry identical values") {
  Table t;
  t.columns = {"name", "value", "count"};
  t.add_row({std::string("a"), 1.5, std::int64_t(3)});
  t.add_row({std::string("b"), 0.00025, std::int64_t(-1)});
  ReportMeta meta;
  meta.seed = 9;
  meta.config_hash = "deadbeef";

  const auto dir = std::filesystem::temp_directory_path() / "gridcast_report_test";
  std::filesystem::create_directories(dir);
  const std::string csv_path = (dir / "t.csv").string();
  const std::string json_path = (dir / "t.json").string();
  write_report(t, meta, ReportFormat::csv, csv_path);
  write_report(t, meta, ReportFormat::json, json_path);

  const CsvTable back = read_csv(csv_path);
  REQUIRE(back.rows.size() == 2);
  CHECK(back.rows[0][1] == "1.5");
  CHECK(back.rows[1][1] == "0.00025");

  std::ifstream jf(json_path);
  std::string js((std::istreambuf_iterator<char>(jf)), std::istreambuf_iterator<char>());
  CHECK(js.find("\"0.00025\"") != std::string::npos);
  CHECK(js.find("deadbeef") != std::string::npos);

  // Determinism: same table twice gives identical bytes.
  const std::string csv2 = (dir / "t2.csv").string();
  write_report(t, meta, ReportFormat::csv, csv2);
  std::ifstream f1(csv_path), f2(csv2);
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);

  Table empty;
  empty.columns = {"x"};
  CHECK_THROWS_WITH_AS(write_report(empty, meta, ReportFormat::csv, csv2),
                       "nothing to report", Error);
  std::filesystem::remove_all(dir);
}
