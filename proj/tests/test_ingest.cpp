#include <cmath>
#include <limits>

#include <doctest.h>

#include "support.hpp"
#include "volnet/errors.hpp"
#include "volnet/ingest.hpp"

using namespace volnet;
using namespace volnet::ingest;

namespace {

Date day(const char* text) { return parse_date_or_throw(text); }

OhlcBar bar(const char* date, double o, double h, double l, double c, std::int64_t v = 100) {
  return {day(date), o, h, l, c, v};
}

FirmMeta meta(std::string ticker, std::string name, ShareClass cls = ShareClass::kA,
              std::optional<std::string> parent = std::nullopt) {
  FirmMeta m;
  m.ticker = std::move(ticker);
  m.name = std::move(name);
  m.share_class = cls;
  m.parent_ticker = std::move(parent);
  return m;
}

VarianceGrid grid_of(const std::vector<double>& column, const std::string& ticker = "AAA") {
  VarianceGrid g;
  g.dates = testing_support::business_days(column.size());
  g.firms = {ticker};
  g.values = Eigen::Map<const Eigen::VectorXd>(column.data(), static_cast<Eigen::Index>(column.size()));
  return g;
}

}  // namespace

TEST_CASE("Garman-Klass matches a high-precision reference value") {
  // Reference computed with 40-digit arithmetic.
  const double expected = 0.009826723275573502065723755079177795119232;
  CHECK(garman_klass_raw(bar("2021-01-04", 100, 110, 95, 105)) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("Garman-Klass is zero for a flat bar and non-negative for valid ranges") {
  CHECK(garman_klass(bar("2021-01-04", 100, 100, 100, 100)) == 0.0);
  CHECK_FALSE(garman_klass_checked(bar("2021-01-04", 100, 100, 100, 100)).clamped);
  std::mt19937_64 rng(11);
  for (int k = 0; k < 2000; ++k) {
    const double low = testing_support::uniform(rng, 1.0, 100.0);
    const double high = low * testing_support::uniform(rng, 1.0, 1.2);
    const double open = testing_support::uniform(rng, low, high);
    const double close = testing_support::uniform(rng, low, high);
    const auto est = garman_klass_checked({day("2021-01-04"), open, high, low, close, 0});
    CHECK_FALSE(est.clamped);
    CHECK(est.value >= 0.0);
  }
}

TEST_CASE("check_bar rejects inconsistent bars") {
  CHECK(check_bar(bar("2021-01-04", 100, 110, 95, 105)).empty());
  CHECK_FALSE(check_bar(bar("2021-01-04", 100, 104, 95, 105)).empty());  // high below close
  CHECK_FALSE(check_bar(bar("2021-01-04", 100, 110, 101, 105)).empty());  // low above open
  CHECK_FALSE(check_bar(bar("2021-01-04", 0, 110, 0, 105)).empty());
  CHECK_FALSE(check_bar(bar("2021-01-04", 100, 110, 95, 105, -1)).empty());
  CHECK_FALSE(check_bar(bar("2021-01-04", std::nan(""), 110, 95, 105)).empty());
}

TEST_CASE("parse_ohlc keeps good rows, rejects bad ones with line numbers, sorts dates") {
  const char* text =
      "date,ticker,open,high,low,close,volume\n"
      "2021-01-05,AAA,10,11,9,10.5,100\n"
      "2021-01-04,AAA,10,11,9,10.5,100\n"
      "2021-01-04,AAA,10,11,9,10.5,100\n"
      "2021-01-06,AAA,10,9,9,10.5,100\n"
      "2021-13-01,BBB,10,11,9,10.5,100\n"
      "2021-01-04,BBB,ten,11,9,10.5,100\n"
      "2021-01-04,CCC,10,11,9,10.5,100\n";
  const auto result = parse_ohlc(text);
  REQUIRE(result.series.size() == 2);
  const auto& aaa = result.series.at("AAA");
  REQUIRE(aaa.size() == 2);
  CHECK(aaa[0].date == day("2021-01-04"));
  CHECK(aaa[1].date == day("2021-01-05"));
  REQUIRE(result.rejects.size() == 4);
  for (const auto& r : result.rejects) CHECK(r.rule == "row_rejected");
  CHECK(result.rejects[0].detail.find("line 4") != std::string::npos);
  CHECK(result.rejects[0].detail.find("duplicate") != std::string::npos);
}

TEST_CASE("parse_ohlc honors a column mapping and fails on missing columns") {
  ColumnMapping schema;
  schema.date = "Day";
  schema.ticker = "Code";
  const char* text = "Day,Code,open,high,low,close\n2021-01-04,AAA,10,11,9,10.5\n";
  const auto result = parse_ohlc(text, schema);
  CHECK(result.series.at("AAA").front().volume == 0);
  CHECK_THROWS_AS(parse_ohlc(text), ValidationError);
}

TEST_CASE("metadata parsing and validation") {
  const char* text =
      "ticker,name,region,state_owned,parent_ticker,share_class\n"
      "000001,Alpha,south,true,,A\n"
      "000002,Beta,north,false,000001,A\n"
      "200002,Beta,north,false,,B\n";
  const auto m = parse_metadata(text);
  REQUIRE(m.size() == 3);
  CHECK(m[0].region == Region::kSouth);
  CHECK(m[0].state_owned);
  CHECK(m[1].parent_ticker == std::optional<std::string>("000001"));
  CHECK(m[2].share_class == ShareClass::kB);

  CHECK_THROWS_AS(parse_metadata("ticker,region,state_owned,share_class\nX,mars,true,A\n"), ValidationError);
  CHECK_THROWS_AS(parse_metadata("ticker,region,state_owned,share_class\nX,north,maybe,A\n"), ValidationError);
  CHECK_THROWS_AS(parse_metadata("ticker,region,state_owned,share_class\nX,north,true,A\nX,north,true,A\n"),
                  ValidationError);
  CHECK_THROWS_AS(
      parse_metadata("ticker,region,state_owned,parent_ticker,share_class\nX,north,true,Y,A\n"),
      ValidationError);
}

TEST_CASE("calendar must be strictly increasing") {
  CHECK(parse_calendar("date\n2021-01-04\n2021-01-05\n").size() == 2);
  CHECK_THROWS_AS(parse_calendar("2021-01-05\n2021-01-04\n"), ValidationError);
  CHECK_THROWS_AS(parse_calendar("2021-01-04\n2021-01-04\n"), ValidationError);
  CHECK_THROWS_AS(parse_calendar("2021-01-04\nnot-a-date\n"), ValidationError);
}

TEST_CASE("filter_universe drops B shares and duplicate listings, keeps parent-linked firms") {
  SeriesMap series;
  auto bars_with_volume = [](std::int64_t v) { return std::vector<OhlcBar>{bar("2021-01-04", 10, 11, 9, 10, v)}; };
  series["A1"] = bars_with_volume(500);   // Alpha A share
  series["H1"] = bars_with_volume(900);   // Alpha H share, larger volume
  series["B1"] = bars_with_volume(1000);  // Alpha B share
  series["P"] = bars_with_volume(10);     // Parent Co
  series["C"] = bars_with_volume(20);     // subsidiary of P with the same group name
  series["T1"] = bars_with_volume(50);    // tie on volume
  series["T2"] = bars_with_volume(50);
  std::vector<FirmMeta> m{meta("A1", "Alpha"),        meta("H1", "Alpha", ShareClass::kH),
                          meta("B1", "Alpha", ShareClass::kB), meta("P", "Group"),
                          meta("C", "Group", ShareClass::kA, "P"), meta("T1", "Tie"),
                          meta("T2", "Tie")};
  const auto result = filter_universe(series, m);
  std::set<std::string> kept;
  for (const auto& [t, b] : result.series) kept.insert(t);
  CHECK(kept == std::set<std::string>{"H1", "P", "C", "T1"});
  std::map<std::string, std::string> rule_of;
  for (const auto& d : result.exclusions) rule_of[d.ticker] = d.rule;
  CHECK(rule_of == std::map<std::string, std::string>{{"B1", "b_share"}, {"A1", "dual_listing"}, {"T2", "dual_listing"}});
  REQUIRE(result.links.size() == 1);
  CHECK(result.links[0] == ParentLink{"C", "P"});

  FilterRules off{false, false};
  CHECK(filter_universe(series, m, off).series.size() == series.size());

  series["ZZ"] = bars_with_volume(1);
  CHECK_THROWS_AS(filter_universe(series, m), ValidationError);
}

TEST_CASE("apply_calendar aligns bars and flags firms with no calendar days") {
  SeriesMap series;
  series["AAA"] = {bar("2021-01-04", 10, 11, 9, 10), bar("2021-01-06", 10, 11, 9, 10),
                   bar("2021-01-09", 10, 11, 9, 10)};  // Saturday, off calendar
  series["OFF"] = {bar("2021-01-09", 10, 11, 9, 10)};
  const TradingCalendar cal({day("2021-01-04"), day("2021-01-05"), day("2021-01-06")});
  const auto aligned = apply_calendar(series, cal);
  REQUIRE(aligned.bars.size() == 1);
  const auto& a = aligned.bars.at("AAA");
  CHECK(a[0].has_value());
  CHECK_FALSE(a[1].has_value());
  CHECK(a[2].has_value());
  CHECK(aligned.gap_counts.at("AAA") == 1);
  REQUIRE(aligned.flagged.size() == 1);
  CHECK(aligned.flagged[0].ticker == "OFF");
}

TEST_CASE("impute_and_log fills gaps of up to nine days and logs the result") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> col(30, 0.0);
  for (std::size_t t = 0; t < col.size(); ++t) col[t] = 1e-4 * static_cast<double>(t + 1);
  for (std::size_t t = 5; t < 14; ++t) col[t] = nan;  // nine missing days
  col[20] = 0.0;                                     // zero variance counts as missing
  const auto result = impute_and_log(grid_of(col));
  REQUIRE(result.panel.num_firms() == 1);
  CHECK(result.dropped.empty());
  CHECK(result.filled_cells == 10);
  for (Eigen::Index t = 5; t < 14; ++t) CHECK(result.panel.values(t, 0) == std::log(col[4]));
  CHECK(result.panel.values(20, 0) == std::log(col[19]));
  CHECK(result.panel.values(0, 0) == std::log(1e-4));
}

TEST_CASE("impute_and_log drops firms with a ten-day run or a leading gap") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> col(30, 1e-4);
  for (std::size_t t = 5; t < 15; ++t) col[t] = nan;  // ten missing days
  auto result = impute_and_log(grid_of(col, "LONG"));
  CHECK(result.panel.num_firms() == 0);
  REQUIRE(result.dropped.size() == 1);
  CHECK(result.dropped[0].rule == "long_gap_run");
  CHECK(result.dropped[0].ticker == "LONG");

  std::vector<double> lead(30, 1e-4);
  lead[0] = nan;
  result = impute_and_log(grid_of(lead, "LEAD"));
  REQUIRE(result.dropped.size() == 1);
  CHECK(result.dropped[0].rule == "leading_gap");

  std::vector<double> tail(30, 1e-4);
  for (std::size_t t = 20; t < 30; ++t) tail[t] = nan;  // trailing run of ten
  CHECK(impute_and_log(grid_of(tail, "TAIL")).dropped.size() == 1);

  ImputeOptions loose{10};
  CHECK(impute_and_log(grid_of(col, "LONG"), loose).panel.num_firms() == 1);
}

TEST_CASE("panel files round-trip exactly") {
  const auto panel = testing_support::synthetic_panel(4, 25, 3);
  const auto text = format_panel(panel);
  CHECK(text.rfind("# volnet-panel v1", 0) == 0);
  const auto back = parse_panel(text);
  CHECK(back.dates == panel.dates);
  CHECK(back.firms == panel.firms);
  CHECK(back.values == panel.values);
  CHECK(format_panel(back) == text);

  CHECK_THROWS_AS(parse_panel("date,A\n2021-01-04,1\n"), ValidationError);
}

TEST_CASE("diagnostics are written as ticker,rule,detail CSV") {
  const std::vector<Diagnostic> d{{"AAA", "b_share", "B-share listing removed"}, {"X", "row_rejected", "line 3: a, b"}};
  CHECK(format_diagnostics(d) ==
        "ticker,rule,detail\nAAA,b_share,B-share listing removed\nX,row_rejected,\"line 3: a, b\"\n");
}
