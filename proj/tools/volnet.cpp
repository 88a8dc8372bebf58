// volnet command-line front end: clean, run, render, diff, inspect.
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "volnet/cli.hpp"
#include "volnet/csv.hpp"
#include "volnet/errors.hpp"

namespace fs = std::filesystem;
using namespace volnet;

namespace {

constexpr const char* kStoreEnv = "VOLNET_STORE";

struct ConfigFlags {
  std::optional<fs::path> file;
  std::optional<std::size_t> window, lags, horizon, folds, iterations, grid_size, threads;
  std::optional<double> alpha, grid_ratio, repulsion, edge_influence, swing_tolerance, speed_constant;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> degree;
  bool adaptive = false;
  bool prevent_overlap = false;

  void add_to(CLI::App& app) {
    app.add_option("--config", file, "key = value config file (schema_version = 1)")->check(CLI::ExistingFile);
    app.add_option("--window", window, "rolling window length in trading days");
    app.add_option("--lags", lags, "VAR lag order");
    app.add_option("--horizon", horizon, "forecast horizon H");
    app.add_option("--alpha", alpha, "elastic-net mixing weight, in (0, 1)");
    app.add_option("--folds", folds, "cross-validation folds");
    app.add_option("--layout-iterations", iterations, "ForceAtlas2 iterations per day");
    app.add_option("--seed", seed, "seed of the first random layout");
    app.add_option("--grid-size", grid_size, "number of lambda values");
    app.add_option("--grid-ratio", grid_ratio, "smallest lambda as a fraction of lambda_max");
    app.add_option("--repulsion-scale", repulsion, "ForceAtlas2 repulsion constant");
    app.add_option("--edge-weight-influence", edge_influence, "exponent applied to edge weights");
    app.add_option("--swing-tolerance", swing_tolerance, "global speed tolerance");
    app.add_option("--speed-constant", speed_constant, "node speed constant");
    app.add_option("--degree-convention", degree, "node_count or pairwise")
        ->check(CLI::IsMember({"node_count", "pairwise"}));
    app.add_flag("--adaptive-tolerance", adaptive, "lower the tolerance when swinging grows");
    app.add_flag("--prevent-overlap", prevent_overlap, "damp node speeds");
    app.add_option("--threads", threads, "worker threads for estimation (0 = hardware)");
  }

  rolling::RollingConfig resolve() const {
    rolling::RollingConfig cfg;
    if (file) cfg = rolling::load_config(*file);
    if (window) cfg.window_length = *window;
    if (lags) cfg.lags = *lags;
    if (horizon) cfg.horizon = *horizon;
    if (alpha) cfg.alpha = *alpha;
    if (folds) cfg.folds = *folds;
    if (iterations) cfg.layout_iterations = *iterations;
    if (seed) cfg.seed = *seed;
    if (grid_size) cfg.grid_size = *grid_size;
    if (grid_ratio) cfg.grid_ratio = *grid_ratio;
    if (repulsion) cfg.repulsion_scale = *repulsion;
    if (edge_influence) cfg.edge_weight_influence = *edge_influence;
    if (swing_tolerance) cfg.swing_tolerance = *swing_tolerance;
    if (speed_constant) cfg.speed_constant = *speed_constant;
    if (degree) {
      cfg.degree_convention =
          *degree == "pairwise" ? layout::DegreeConvention::kPairwise : layout::DegreeConvention::kNodeCount;
    }
    if (adaptive) cfg.adaptive_tolerance = true;
    if (prevent_overlap) cfg.prevent_overlap = true;
    if (threads) cfg.threads = *threads;
    rolling::validate(cfg);
    return cfg;
  }
};

fs::path store_root(const std::optional<fs::path>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv(kStoreEnv); env != nullptr && *env != '\0') return env;
  throw ValidationError(fmt::format("no snapshot store: pass --store or set {}", kStoreEnv));
}

std::map<std::string, std::string> read_categories(const fs::path& path, const std::string& column) {
  const auto doc = csv::read_file(path);
  const auto ticker = doc.column("ticker");
  const auto value = doc.column(column);
  if (!ticker || !value) {
    throw ValidationError(fmt::format("{}: needs columns 'ticker' and '{}'", path.string(), column));
  }
  std::map<std::string, std::string> out;
  for (const auto& row : doc.rows) {
    if (row.fields.size() <= std::max(*ticker, *value)) {
      throw ValidationError(fmt::format("{}: line {}: too few fields", path.string(), row.line));
    }
    out[csv::trim(row.fields[*ticker])] = csv::trim(row.fields[*value]);
  }
  return out;
}

std::map<std::string, std::string> parse_palette(const std::vector<std::string>& entries) {
  std::map<std::string, std::string> palette;
  for (const auto& entry : entries) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == entry.size()) {
      throw ValidationError(fmt::format("palette entry '{}' is not category=color", entry));
    }
    palette[entry.substr(0, eq)] = entry.substr(eq + 1);
  }
  return palette;
}

fevd::Measure parse_measure(const std::string& name) {
  if (name == "to") return fevd::Measure::kTo;
  if (name == "from") return fevd::Measure::kFrom;
  return fevd::Measure::kNet;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Volatility connectedness networks from daily OHLC panels"};
  app.require_subcommand(1);
  std::optional<fs::path> store;

  // clean
  auto* clean = app.add_subcommand("clean", "validate OHLC data and build the log-variance panel");
  cli::CleanInputs clean_in;
  fs::path panel_out = "panel.csv";
  fs::path report_out = "diagnostics.csv";
  bool keep_b = false;
  bool keep_dual = false;
  clean->add_option("--ohlc", clean_in.ohlc, "OHLC CSV (date,ticker,open,high,low,close[,volume])")
      ->required()
      ->check(CLI::ExistingFile);
  clean->add_option("--metadata", clean_in.metadata, "firm metadata CSV")->required()->check(CLI::ExistingFile);
  clean->add_option("--calendar", clean_in.calendar, "trading calendar CSV")->required()->check(CLI::ExistingFile);
  clean->add_option("--panel-out", panel_out, "output panel file")->capture_default_str();
  clean->add_option("--report-out", report_out, "output diagnostics CSV")->capture_default_str();
  clean->add_option("--max-fill-run", clean_in.impute.max_fill_run, "longest gap filled forward")
      ->capture_default_str();
  clean->add_option("--date-column", clean_in.schema.date);
  clean->add_option("--ticker-column", clean_in.schema.ticker);
  clean->add_option("--open-column", clean_in.schema.open);
  clean->add_option("--high-column", clean_in.schema.high);
  clean->add_option("--low-column", clean_in.schema.low);
  clean->add_option("--close-column", clean_in.schema.close);
  clean->add_option("--volume-column", clean_in.schema.volume);
  clean->add_flag("--keep-b-shares", keep_b, "do not drop B-share listings");
  clean->add_flag("--keep-dual-listings", keep_dual, "do not collapse listings of one enterprise");

  // run
  auto* run = app.add_subcommand("run", "rolling-window estimation into the snapshot store");
  fs::path run_panel;
  std::optional<fs::path> run_meta;
  bool traces = false;
  bool coefficients = false;
  ConfigFlags config_flags;
  run->add_option("--panel", run_panel, "panel file written by clean")->required()->check(CLI::ExistingFile);
  run->add_option("--metadata", run_meta, "firm metadata CSV for node attributes")->check(CLI::ExistingFile);
  run->add_option("--store", store, fmt::format("snapshot store root (default ${})", kStoreEnv));
  run->add_flag("--traces", traces, "write per-iteration layout traces");
  run->add_flag("--coefficients", coefficients, "write per-window VAR coefficients");
  config_flags.add_to(*run);

  // render
  auto* render = app.add_subcommand("render", "export one snapshot as SVG and DOT");
  std::string render_date;
  fs::path render_out = ".";
  std::string color_by = "region";
  std::string size_by = "to";
  cli::RenderSpec spec;
  std::optional<fs::path> categories_file;
  std::string category_column = "category";
  std::vector<std::string> palette_entries;
  bool no_labels = false;
  render->add_option("--date", render_date, "snapshot date (YYYY-MM-DD)")->required();
  render->add_option("--store", store, fmt::format("snapshot store root (default ${})", kStoreEnv));
  render->add_option("--out", render_out, "output directory")->capture_default_str();
  render->add_option("--color-by", color_by)->check(CLI::IsMember({"region", "state_owned", "custom"}))
      ->capture_default_str();
  render->add_option("--size-by", size_by)->check(CLI::IsMember({"to", "from", "net", "uniform"}))
      ->capture_default_str();
  render->add_option("--size-scale", spec.size_scale, "radius units per percentage point")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  render->add_option("--categories", categories_file, "CSV with ticker and category columns")
      ->check(CLI::ExistingFile);
  render->add_option("--category-column", category_column)->capture_default_str();
  render->add_option("--palette", palette_entries, "category=color, repeatable");
  render->add_flag("--no-labels", no_labels, "omit ticker labels");

  // diff
  auto* diff = app.add_subcommand("diff", "event study between stored snapshots");
  std::string before, after;
  std::vector<std::string> intermediate;
  std::vector<std::string> measures;
  std::optional<fs::path> prices;
  std::optional<fs::path> diff_csv;
  std::size_t top_k = 5;
  diff->add_option("--before", before, "first date")->required();
  diff->add_option("--after", after, "last date")->required();
  diff->add_option("--intermediate", intermediate, "dates between, repeatable");
  diff->add_option("--measures", measures, "subset of to, from, net")
      ->check(CLI::IsMember({"to", "from", "net"}))
      ->delimiter(',');
  diff->add_option("--prices", prices, "OHLC CSV for closing-price directions")->check(CLI::ExistingFile);
  diff->add_option("--csv", diff_csv, "write the CSV report here");
  diff->add_option("--top", top_k, "movers listed per measure")->capture_default_str();
  diff->add_option("--store", store, fmt::format("snapshot store root (default ${})", kStoreEnv));

  // inspect
  auto* inspect = app.add_subcommand("inspect", "print one snapshot's connectedness table");
  std::string inspect_date;
  inspect->add_option("--date", inspect_date, "snapshot date (YYYY-MM-DD)")->required();
  inspect->add_option("--store", store, fmt::format("snapshot store root (default ${})", kStoreEnv));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (clean->parsed()) {
      clean_in.rules.drop_b_shares = !keep_b;
      clean_in.rules.dedupe_dual_listings = !keep_dual;
      const auto result = cli::cmd_clean(clean_in, panel_out, report_out);
      std::cout << fmt::format("{} firms x {} dates, {} cells filled, {} diagnostics\n",
                               result.panel.num_firms(), result.panel.num_dates(), result.filled_cells,
                               result.diagnostics.size());
    } else if (run->parsed()) {
      const auto cfg = config_flags.resolve();
      const auto summary = cli::cmd_run(run_panel, cfg, store_root(store), run_meta, std::cout, traces, coefficients);
      return summary.failures.empty() ? 0 : 2;
    } else if (render->parsed()) {
      spec.color_by = color_by == "region"        ? cli::ColorBy::kRegion
                      : color_by == "state_owned" ? cli::ColorBy::kStateOwned
                                                  : cli::ColorBy::kCustom;
      spec.size_by = size_by == "to"     ? cli::SizeBy::kTo
                     : size_by == "from" ? cli::SizeBy::kFrom
                     : size_by == "net"  ? cli::SizeBy::kNet
                                         : cli::SizeBy::kUniform;
      spec.label_nodes = !no_labels;
      spec.palette = parse_palette(palette_entries);
      if (spec.color_by == cli::ColorBy::kCustom) {
        if (!categories_file) throw ValidationError("--color-by custom needs --categories");
        spec.custom_categories = read_categories(*categories_file, category_column);
      }
      const auto out = cli::cmd_render(store_root(store), parse_date_or_throw(render_date), spec, render_out);
      std::cout << out.svg.string() << '\n' << out.dot.string() << '\n';
    } else if (diff->parsed()) {
      cli::EventStudySpec es;
      es.before = parse_date_or_throw(before);
      es.after = parse_date_or_throw(after);
      for (const auto& d : intermediate) es.intermediate.push_back(parse_date_or_throw(d));
      if (!measures.empty()) {
        es.measures.clear();
        for (const auto& m : measures) es.measures.insert(parse_measure(m));
      }
      es.top_k = top_k;
      const auto report = cli::cmd_event_study(store_root(store), es, prices, diff_csv);
      std::cout << report.text;
    } else if (inspect->parsed()) {
      std::cout << cli::cmd_inspect(store_root(store), parse_date_or_throw(inspect_date));
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
