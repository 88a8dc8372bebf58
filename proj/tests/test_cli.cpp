#include <cstdlib>
#include <set>
#include <sstream>

#include <sys/wait.h>

#include <doctest.h>
#include <fmt/format.h>

#include "support.hpp"
#include "volnet/cli.hpp"
#include "volnet/csv.hpp"
#include "volnet/digest.hpp"
#include "volnet/errors.hpp"

using namespace volnet;
using namespace volnet::cli;
using testing_support::TempDir;
namespace fs = std::filesystem;

namespace {

struct Fixture {
  fs::path ohlc;
  fs::path metadata;
  fs::path calendar;
};

// Writes OHLC, metadata and calendar files for `tickers` over `days` weekdays.
// Days listed in `gaps[ticker]` have no bar for that ticker.
Fixture write_fixture(const fs::path& dir, const std::vector<std::string>& tickers, std::size_t days,
                      const std::string& metadata_rows,
                      const std::map<std::string, std::set<std::size_t>>& gaps = {}) {
  const auto dates = testing_support::business_days(days);
  std::mt19937_64 rng(99);
  std::string ohlc = "date,ticker,open,high,low,close,volume\n";
  for (const auto& t : tickers) {
    double price = 20.0;
    for (std::size_t k = 0; k < days; ++k) {
      const double open = price;
      const double close = open * std::exp(0.02 * testing_support::normal(rng));
      const double high = std::max(open, close) * (1.0 + testing_support::uniform(rng, 0.001, 0.03));
      const double low = std::min(open, close) * (1.0 - testing_support::uniform(rng, 0.001, 0.03));
      price = close;
      if (auto it = gaps.find(t); it != gaps.end() && it->second.contains(k)) continue;
      ohlc += fmt::format("{},{},{},{},{},{},{}\n", format_date(dates[k]), t, open, high, low, close, 1000);
    }
  }
  std::string cal = "date\n";
  for (const auto& d : dates) cal += format_date(d) + "\n";
  Fixture f{dir / "ohlc.csv", dir / "meta.csv", dir / "calendar.csv"};
  write_text_file(f.ohlc, ohlc);
  write_text_file(f.metadata, "ticker,name,region,state_owned,parent_ticker,share_class\n" + metadata_rows);
  write_text_file(f.calendar, cal);
  return f;
}

CleanInputs inputs_of(const Fixture& f) {
  CleanInputs in;
  in.ohlc = f.ohlc;
  in.metadata = f.metadata;
  in.calendar = f.calendar;
  return in;
}

rolling::NetworkSnapshot make_snapshot(const std::string& date, const Eigen::MatrixXd& d,
                                       std::vector<std::string> firms, std::uint64_t seed = 1) {
  rolling::NetworkSnapshot s;
  s.date = parse_date_or_throw(date);
  s.table = fevd::build_table(d, firms, 10);
  s.layout = layout::random_positions(firms.size(), seed);
  s.model.lags = 1;
  s.model.equations.assign(firms.size(), {0.1, true, {1}});
  s.provenance.config_hash = "test";
  s.provenance.window_start = s.date;
  s.provenance.window_end = s.date;
  s.provenance.window_digest = "test";
  s.provenance.layout_source = "random";
  s.provenance.final_layout_digest = rolling::positions_digest(s.layout);
  return s;
}

Eigen::MatrixXd random_d(std::mt19937_64& rng, Eigen::Index n) {
  Eigen::MatrixXd theta(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) theta(i, j) = testing_support::uniform(rng, 0.05, 1.0);
  }
  return fevd::normalize_rows(theta);
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

int run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + VOLNET_CLI_PATH + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kThreeFirms =
    "AAA,Alpha,south,true,,A\n"
    "BBB,Beta,north,false,,A\n"
    "CCC,Gamma,east,false,,A\n";

}  // namespace

TEST_CASE("clean on a three-firm fixture gives three columns and no diagnostics") {
  TempDir dir("clean");
  const auto f = write_fixture(dir.path(), {"AAA", "BBB", "CCC"}, 40, kThreeFirms);
  const auto result = cmd_clean(inputs_of(f), dir.path() / "panel.csv", dir.path() / "report.csv");
  CHECK(result.panel.num_firms() == 3);
  CHECK(result.panel.num_dates() == 40);
  CHECK(result.diagnostics.empty());
  CHECK(read_text_file(dir.path() / "report.csv") == "ticker,rule,detail\n");
  const auto panel = ingest::read_panel(dir.path() / "panel.csv");
  CHECK(panel.values == result.panel.values);

  const auto first = read_text_file(dir.path() / "panel.csv");
  cmd_clean(inputs_of(f), dir.path() / "panel.csv", dir.path() / "report.csv");
  CHECK(read_text_file(dir.path() / "panel.csv") == first);
}

TEST_CASE("clean names an excluded B-share twin") {
  TempDir dir("bshare");
  const auto f = write_fixture(dir.path(), {"AAA", "BBB", "CCC", "AAB"}, 30,
                               std::string(kThreeFirms) + "AAB,Alpha,south,true,,B\n");
  const auto result = clean(inputs_of(f));
  CHECK(result.panel.num_firms() == 3);
  REQUIRE(result.diagnostics.size() == 1);
  CHECK(result.diagnostics[0].ticker == "AAB");
  CHECK(result.diagnostics[0].rule == "b_share");
}

TEST_CASE("clean drops a firm with a twelve-day gap and names it") {
  TempDir dir("gap");
  std::set<std::size_t> gap;
  for (std::size_t k = 10; k < 22; ++k) gap.insert(k);
  const auto f = write_fixture(dir.path(), {"AAA", "BBB", "CCC"}, 40, kThreeFirms, {{"BBB", gap}});
  const auto result = cmd_clean(inputs_of(f), dir.path() / "panel.csv", dir.path() / "report.csv");
  CHECK(result.panel.firms == std::vector<std::string>{"AAA", "CCC"});
  REQUIRE(result.diagnostics.size() == 1);
  CHECK(result.diagnostics[0].ticker == "BBB");
  CHECK(result.diagnostics[0].rule == "long_gap_run");
  CHECK(read_text_file(dir.path() / "report.csv").find("BBB,long_gap_run") != std::string::npos);
}

TEST_CASE("clean reports rejected rows and parent links") {
  TempDir dir("links");
  const auto f = write_fixture(dir.path(), {"AAA", "BBB", "CCC"}, 30,
                               "AAA,Alpha,south,true,,A\nBBB,Beta,north,false,AAA,A\nCCC,Gamma,east,false,,A\n");
  auto text = read_text_file(f.ohlc);
  text += "2021-01-04,CCC,10,9,11,10,5\n";
  write_text_file(f.ohlc, text);
  const auto result = clean(inputs_of(f));
  CHECK(result.panel.num_firms() == 3);
  std::set<std::string> rules;
  for (const auto& d : result.diagnostics) rules.insert(d.rule);
  CHECK(rules == std::set<std::string>{"row_rejected", "parent_link"});
  REQUIRE(result.links.size() == 1);
  CHECK(result.links[0] == ingest::ParentLink{"BBB", "AAA"});
}

TEST_CASE("run writes one summary line per window and resumes without recomputing") {
  TempDir dir("run");
  const auto panel = testing_support::synthetic_panel(3, 50, 4);
  ingest::write_panel(dir.path() / "panel.csv", panel);
  rolling::RollingConfig cfg;
  cfg.window_length = 40;
  cfg.lags = 1;
  cfg.folds = 4;
  cfg.grid_size = 10;
  cfg.layout_iterations = 30;
  std::ostringstream out;
  const auto summary = cmd_run(dir.path() / "panel.csv", cfg, dir.path() / "store", std::nullopt, out);
  CHECK(summary.computed == 11);
  const auto lines = lines_of(out.str());
  REQUIRE(lines.size() == 12);
  CHECK(lines[0].find(" total=") != std::string::npos);
  CHECK(lines[0].find(" median_nonzero=") != std::string::npos);
  CHECK(lines.back() == "windows=11 computed=11 reused=0 failures=0");

  std::ostringstream again;
  const auto rerun = cmd_run(dir.path() / "panel.csv", cfg, dir.path() / "store", std::nullopt, again);
  CHECK(rerun.computed == 0);
  CHECK(again.str() == "windows=11 computed=0 reused=11 failures=0\n");

  cfg.alpha = 1.0;
  CHECK_THROWS_WITH_AS(cmd_run(dir.path() / "panel.csv", cfg, dir.path() / "store", std::nullopt, out),
                       doctest::Contains("(0, 1)"), ValidationError);
}

TEST_CASE("summary line format") {
  auto s = make_snapshot("2021-03-01", 100.0 * Eigen::MatrixXd::Identity(2, 2), {"A", "B"});
  s.model.lags = 2;
  s.model.equations = {{0.1, true, {1, 0}}, {0.1, true, {2, 0}}};
  CHECK(summary_line(s) == "2021-03-01 total=0.0000 median_nonzero=1.5/0");
  s.provenance.degraded = true;
  CHECK(summary_line(s) == "2021-03-01 total=0.0000 median_nonzero=1.5/0 DEGRADED");
}

TEST_CASE("an identity decomposition renders every node at the minimum radius") {
  const auto s = make_snapshot("2021-03-01", 100.0 * Eigen::MatrixXd::Identity(4, 4), {"A", "B", "C", "D"});
  for (double r : node_radii(s.table, {})) CHECK(r == kMinRadius);
  const auto svg = render_svg(s, {});
  CHECK(std::count(svg.begin(), svg.end(), '\n') > 4);
  for (const auto& line : lines_of(svg)) {
    if (line.rfind("<circle", 0) == 0) CHECK(line.find("r=\"2.000\"") != std::string::npos);
  }
}

TEST_CASE("changing one firm's to-value changes only that node's circle") {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd d = random_d(rng, 5);
  Eigen::MatrixXd d2 = d;
  d2(0, 3) += 5.0;  // firm 3 transmits more to firm 0; row 0 still sums to 100
  d2(0, 0) -= 5.0;
  const auto a = lines_of(render_svg(make_snapshot("2021-03-01", d, {"A", "B", "C", "D", "E"}), {}));
  const auto b = lines_of(render_svg(make_snapshot("2021-03-01", d2, {"A", "B", "C", "D", "E"}), {}));
  REQUIRE(a.size() == b.size());
  std::vector<std::size_t> changed;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] != b[k]) changed.push_back(k);
  }
  REQUIRE(changed.size() == 1);
  CHECK(a[changed[0]].find("id=\"node-D\"") != std::string::npos);
}

TEST_CASE("radius mapping is monotone in the chosen measure") {
  std::mt19937_64 rng(5);
  const auto s = make_snapshot("2021-03-01", random_d(rng, 8), {"A", "B", "C", "D", "E", "F", "G", "H"});
  for (SizeBy by : {SizeBy::kTo, SizeBy::kFrom, SizeBy::kNet}) {
    RenderSpec spec;
    spec.size_by = by;
    const auto r = node_radii(s.table, spec);
    const Eigen::VectorXd m = by == SizeBy::kTo ? s.table.to_others
                              : by == SizeBy::kFrom ? s.table.from_others
                                                    : s.table.net;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      CHECK(r[static_cast<std::size_t>(i)] >= kMinRadius);
      for (Eigen::Index j = 0; j < m.size(); ++j) {
        if (m(i) < m(j)) CHECK(r[static_cast<std::size_t>(i)] < r[static_cast<std::size_t>(j)]);
      }
    }
  }
  RenderSpec uniform;
  uniform.size_by = SizeBy::kUniform;
  for (double r : node_radii(s.table, uniform)) CHECK(r == kMinRadius);
}

TEST_CASE("ownership coloring uses exactly two fills and palettes must cover categories") {
  std::mt19937_64 rng(7);
  auto s = make_snapshot("2021-03-01", random_d(rng, 4), {"A", "B", "C", "D"});
  s.nodes = {{"A", {"south", true, {}}}, {"B", {"north", false, {}}},
             {"C", {"south", true, {}}}, {"D", {"east", false, {}}}};
  RenderSpec spec;
  spec.color_by = ColorBy::kStateOwned;
  const auto svg = render_svg(s, spec);
  std::set<std::string> fills;
  for (const auto& line : lines_of(svg)) {
    if (line.rfind("<circle", 0) != 0) continue;
    const auto pos = line.find("fill=\"") + 6;
    fills.insert(line.substr(pos, line.find('"', pos) - pos));
  }
  CHECK(fills.size() == 2);

  spec.palette = {{"state_owned", "#000000"}};
  CHECK_THROWS_AS(render_svg(s, spec), ValidationError);
  spec.palette["private"] = "#ffffff";
  CHECK_NOTHROW(render_svg(s, spec));

  RenderSpec custom;
  custom.color_by = ColorBy::kCustom;
  custom.custom_categories = {{"A", "x"}, {"B", "y"}, {"C", "x"}};
  CHECK_THROWS_AS(render_svg(s, custom), ValidationError);
  custom.custom_categories["D"] = "z";
  CHECK(node_categories(s, custom) == std::vector<std::string>{"x", "y", "x", "z"});
}

TEST_CASE("render writes deterministic SVG and DOT files; DOT carries positions and weights") {
  TempDir dir("render");
  std::mt19937_64 rng(9);
  const auto s = make_snapshot("2021-03-01", random_d(rng, 3), {"A", "B", "C"});
  rolling::store_snapshot(s, dir.path() / "store");
  const auto out = cmd_render(dir.path() / "store", s.date, {}, dir.path() / "fig");
  const auto svg = read_text_file(out.svg);
  const auto dot = read_text_file(out.dot);
  cmd_render(dir.path() / "store", s.date, {}, dir.path() / "fig");
  CHECK(read_text_file(out.svg) == svg);
  CHECK(read_text_file(out.dot) == dot);
  CHECK(out.svg.filename() == "2021-03-01.svg");
  CHECK(svg.find("radius = 2 + 0.1 * (to - 0)") != std::string::npos);
  CHECK(dot.find("pos=\"" + csv::format_double(s.layout[0].x) + "," + csv::format_double(s.layout[0].y) + "!\"") !=
        std::string::npos);
  CHECK(dot.find("\"B\" -> \"A\" [weight=" + csv::format_double(s.table.d(0, 1) / 100.0) + "]") !=
        std::string::npos);
  CHECK_THROWS_AS(cmd_render(dir.path() / "store", parse_date_or_throw("2021-03-02"), {}, dir.path() / "fig"),
                  NotFoundError);
}

TEST_CASE("event study: identical snapshots give zero counts") {
  TempDir dir("es-same");
  std::mt19937_64 rng(11);
  const Eigen::MatrixXd d = random_d(rng, 6);
  const std::vector<std::string> firms{"A", "B", "C", "D", "E", "F"};
  rolling::store_snapshot(make_snapshot("2021-03-01", d, firms), dir.path());
  rolling::store_snapshot(make_snapshot("2021-03-02", d, firms), dir.path());
  EventStudySpec spec;
  spec.before = parse_date_or_throw("2021-03-01");
  spec.after = parse_date_or_throw("2021-03-02");
  const auto report = event_study(dir.path(), spec);
  REQUIRE(report.pairs.size() == 1);
  for (auto m : {fevd::Measure::kTo, fevd::Measure::kFrom, fevd::Measure::kNet}) {
    CHECK(report.pairs[0].diff.counts(m).up == 0);
    CHECK(report.pairs[0].diff.counts(m).down == 0);
  }
  CHECK(report.text.find("to: 0 up, 0 down") != std::string::npos);
}

TEST_CASE("event study: five raised to-values are reported as five up") {
  TempDir dir("es-five");
  const std::vector<std::string> firms{"A", "B", "C", "D", "E", "F", "G", "H"};
  std::mt19937_64 rng(13);
  const Eigen::MatrixXd d = random_d(rng, 8);
  Eigen::MatrixXd d2 = d;
  // Raise the to-value of firms 1..5 by shifting mass from firm 0's own share.
  for (Eigen::Index j = 1; j <= 5; ++j) {
    d2(0, j) += 1.0;
    d2(0, 0) -= 1.0;
  }
  rolling::store_snapshot(make_snapshot("2021-03-01", d, firms), dir.path());
  rolling::store_snapshot(make_snapshot("2021-03-08", d2, firms), dir.path());
  EventStudySpec spec;
  spec.before = parse_date_or_throw("2021-03-01");
  spec.after = parse_date_or_throw("2021-03-08");
  const auto report = cmd_event_study(dir.path(), spec, std::nullopt, dir.path() / "es.csv");
  CHECK(report.pairs[0].diff.to.up == 5);
  CHECK(report.pairs[0].diff.to.down == 0);
  CHECK(report.text.find("to: 5 up, 0 down") != std::string::npos);
  CHECK(read_text_file(dir.path() / "es.csv") == report.csv);

  spec.intermediate = {parse_date_or_throw("2021-03-04")};
  CHECK_THROWS_AS(event_study(dir.path(), spec), NotFoundError);
  spec.intermediate.clear();
  std::swap(spec.before, spec.after);
  CHECK_THROWS_AS(event_study(dir.path(), spec), ValidationError);
}

TEST_CASE("event study: a falling price panel gives all-down price directions") {
  TempDir dir("es-price");
  const std::vector<std::string> firms{"A", "B", "C"};
  std::mt19937_64 rng(17);
  rolling::store_snapshot(make_snapshot("2021-03-01", random_d(rng, 3), firms), dir.path());
  rolling::store_snapshot(make_snapshot("2021-03-03", random_d(rng, 3), firms), dir.path());
  std::string ohlc = "date,ticker,open,high,low,close\n";
  const std::vector<std::string> days{"2021-03-01", "2021-03-02", "2021-03-03"};
  for (const auto& t : {"A", "B", "C", "Z"}) {
    double price = 50.0;
    for (const auto& day : days) {
      ohlc += fmt::format("{},{},{},{},{},{}\n", day, t, price, price + 1, price - 2, price - 1);
      price -= 1.0;
    }
  }
  write_text_file(dir.path() / "prices.csv", ohlc);
  EventStudySpec spec;
  spec.before = parse_date_or_throw("2021-03-01");
  spec.after = parse_date_or_throw("2021-03-03");
  const auto report = cmd_event_study(dir.path(), spec, dir.path() / "prices.csv", std::nullopt);
  REQUIRE(report.pairs[0].price.size() == 3);
  for (auto p : report.pairs[0].price) CHECK(p == PriceMove::kDown);
  CHECK(report.text.find("price_direction: 0 up, 3 down") != std::string::npos);
  REQUIRE(report.price_mismatches.size() == 1);
  CHECK(report.price_mismatches[0].find("Z") != std::string::npos);
}

TEST_CASE("periphery flags use the 70th percentile of centroid distances") {
  // The centroid is the origin; distances are 1, 2, 3, 4, 5 and sqrt(17).
  const layout::Positions pos{{1, 0}, {-2, 0}, {0, 3}, {0, -4}, {5, 0}, {-4, 1}};
  std::vector<double> dist;
  layout::Vec2 c;
  for (const auto& p : pos) c += p;
  c = (1.0 / 6.0) * c;
  for (const auto& p : pos) dist.push_back((p - c).norm());
  auto sorted = dist;
  std::sort(sorted.begin(), sorted.end());
  const double rank = 0.7 * 5.0;
  const double cutoff = sorted[3] + 0.5 * (sorted[4] - sorted[3]);
  CHECK(rank == 3.5);
  const auto flags = periphery_flags(pos);
  for (std::size_t i = 0; i < pos.size(); ++i) CHECK(flags[i] == (dist[i] > cutoff));
  CHECK(std::count(flags.begin(), flags.end(), true) == 2);
}

TEST_CASE("price_move uses the last close on or before each date") {
  const std::vector<ingest::OhlcBar> bars{{parse_date_or_throw("2021-03-01"), 10, 11, 9, 10, 0},
                                          {parse_date_or_throw("2021-03-03"), 10, 12, 9, 11, 0}};
  CHECK(price_move(bars, parse_date_or_throw("2021-03-02"), parse_date_or_throw("2021-03-05")) == PriceMove::kUp);
  CHECK(price_move(bars, parse_date_or_throw("2021-03-01"), parse_date_or_throw("2021-03-02")) == PriceMove::kFlat);
  CHECK(price_move(bars, parse_date_or_throw("2021-02-01"), parse_date_or_throw("2021-03-02")) ==
        PriceMove::kMissing);
}

TEST_CASE("inspect prints the stored table") {
  TempDir dir("inspect");
  std::mt19937_64 rng(19);
  const auto s = make_snapshot("2021-03-01", random_d(rng, 3), {"A", "B", "C"});
  rolling::store_snapshot(s, dir.path());
  const auto text = cmd_inspect(dir.path(), s.date);
  CHECK(text.find(fevd::format_table_csv(s.table)) != std::string::npos);
  CHECK(text.rfind("snapshot 2021-03-01", 0) == 0);
}

TEST_CASE("command-line exit codes and store environment variable") {
  TempDir dir("exe");
  std::mt19937_64 rng(23);
  const auto s = make_snapshot("2021-03-01", random_d(rng, 3), {"A", "B", "C"});
  rolling::store_snapshot(s, dir.path() / "store");
  const auto store = (dir.path() / "store").string();
  const auto env = "VOLNET_STORE=" + store;

  CHECK(run_cli("inspect --date 2021-03-01", env) == 0);
  CHECK(run_cli("inspect --date 2021-03-01 --store " + store, "VOLNET_STORE=") == 0);
  CHECK(run_cli("inspect --date 2021-03-01", "VOLNET_STORE=") == 1);
  CHECK(run_cli("inspect --date 2021-03-09", env) == 2);
  CHECK(run_cli("inspect --date 2021-3-1", env) == 1);
  CHECK(run_cli("inspect") == 1);
  CHECK(run_cli("frobnicate") == 1);
  CHECK(run_cli("render --date 2021-03-01 --out " + (dir.path() / "fig").string(), env) == 0);
  CHECK(fs::exists(dir.path() / "fig" / "2021-03-01.svg"));
  CHECK(run_cli("render --date 2021-03-01 --palette south=#000000", env) == 1);

  const auto panel = testing_support::synthetic_panel(3, 30, 4);
  ingest::write_panel(dir.path() / "panel.csv", panel);
  const auto panel_arg = " --panel " + (dir.path() / "panel.csv").string();
  CHECK(run_cli("run" + panel_arg + " --alpha 1.5", env) == 1);
  write_text_file(dir.path() / "bad.conf", "schema_version = 1\nalpha = 0\nfolds = 1\n");
  CHECK(run_cli("run" + panel_arg + " --config " + (dir.path() / "bad.conf").string(), env) == 1);
  CHECK(run_cli("run" + panel_arg + " --window 25 --lags 1 --folds 3 --grid-size 5 --layout-iterations 10 --store " +
                (dir.path() / "runstore").string()) == 0);
  CHECK(rolling::list_snapshot_dates(dir.path() / "runstore").size() == 6);
}
