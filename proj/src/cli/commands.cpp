#include <fmt/format.h>

#include "volnet/cli.hpp"
#include "volnet/csv.hpp"
#include "volnet/digest.hpp"
#include "volnet/errors.hpp"

namespace volnet::cli {

namespace fs = std::filesystem;

CleanResult clean(const CleanInputs& inputs) {
  CleanResult result;
  auto loaded = ingest::load_ohlc(inputs.ohlc, inputs.schema);
  const auto meta = ingest::load_metadata(inputs.metadata);
  const auto calendar = ingest::load_calendar(inputs.calendar);
  auto& diags = result.diagnostics;
  diags.insert(diags.end(), loaded.rejects.begin(), loaded.rejects.end());

  auto universe = ingest::filter_universe(loaded.series, meta, inputs.rules);
  diags.insert(diags.end(), universe.exclusions.begin(), universe.exclusions.end());
  for (const auto& link : universe.links) {
    diags.push_back({link.child, "parent_link", fmt::format("subsidiary of {}; both retained", link.parent)});
  }
  result.links = universe.links;

  const auto aligned = ingest::apply_calendar(universe.series, calendar);
  diags.insert(diags.end(), aligned.flagged.begin(), aligned.flagged.end());

  const auto grid = ingest::variance_grid(aligned);
  result.clamped = grid.clamped_count;
  if (grid.clamped_count > 0) {
    diags.push_back({"", "gk_clamped", fmt::format("{} negative variance estimates clamped", grid.clamped_count)});
  }
  auto imputed = ingest::impute_and_log(grid, inputs.impute);
  diags.insert(diags.end(), imputed.dropped.begin(), imputed.dropped.end());
  result.filled_cells = imputed.filled_cells;
  result.panel = std::move(imputed.panel);
  return result;
}

CleanResult cmd_clean(const CleanInputs& inputs, const fs::path& panel_out, const fs::path& report_out) {
  auto result = clean(inputs);
  ingest::write_panel(panel_out, result.panel);
  ingest::write_diagnostics(report_out, result.diagnostics);
  return result;
}

std::string summary_line(const rolling::NetworkSnapshot& snapshot) {
  std::string medians;
  for (double m : snapshot.model.median_nonzero_per_lag()) {
    medians += (medians.empty() ? "" : "/") + csv::format_double(m);
  }
  return fmt::format("{} total={:.4f} median_nonzero={}{}", format_date(snapshot.date), snapshot.table.total,
                     medians, snapshot.provenance.degraded ? " DEGRADED" : "");
}

rolling::PipelineSummary cmd_run(const fs::path& panel_path, const rolling::RollingConfig& cfg,
                                 const fs::path& store, const std::optional<fs::path>& metadata,
                                 std::ostream& out, bool write_traces, bool dump_coefficients) {
  rolling::validate(cfg);
  const auto panel = ingest::read_panel(panel_path);
  std::map<std::string, rolling::NodeAttributes> nodes;
  if (metadata) nodes = rolling::node_attributes(ingest::load_metadata(*metadata));
  rolling::PipelineOptions options;
  options.store = store;
  options.write_traces = write_traces;
  options.dump_coefficients = dump_coefficients;
  options.on_snapshot = [&out](const rolling::NetworkSnapshot& s) { out << summary_line(s) << '\n'; };
  auto summary = rolling::run_pipeline(panel, nodes, cfg, options);
  out << fmt::format("windows={} computed={} reused={} failures={}\n", summary.windows, summary.computed,
                     summary.reused, summary.failures.size());
  for (const auto& f : summary.failures) out << fmt::format("failed {}: {}\n", format_date(f.date), f.message);
  return summary;
}

RenderOutput cmd_render(const fs::path& store, const Date& date, const RenderSpec& spec, const fs::path& out_dir) {
  const auto snapshot = rolling::load_snapshot(date, store);
  const auto svg = render_svg(snapshot, spec);
  const auto dot = render_dot(snapshot, spec);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError(fmt::format("cannot create '{}': {}", out_dir.string(), ec.message()));
  RenderOutput out{out_dir / (format_date(date) + ".svg"), out_dir / (format_date(date) + ".dot")};
  write_text_file(out.svg, svg);
  write_text_file(out.dot, dot);
  return out;
}

EventStudyReport cmd_event_study(const fs::path& store, const EventStudySpec& spec,
                                 const std::optional<fs::path>& price_panel,
                                 const std::optional<fs::path>& csv_out) {
  std::optional<ingest::SeriesMap> prices;
  if (price_panel) prices = ingest::load_ohlc(*price_panel).series;
  auto report = event_study(store, spec, prices);
  if (csv_out) write_text_file(*csv_out, report.csv);
  return report;
}

std::string cmd_inspect(const fs::path& store, const Date& date) {
  const auto s = rolling::load_snapshot(date, store);
  std::string out = fmt::format("snapshot {} (window {} .. {}){}\n", format_date(s.date),
                                format_date(s.provenance.window_start), format_date(s.provenance.window_end),
                                s.provenance.degraded ? " DEGRADED: " + s.provenance.failure : "");
  out += fmt::format("total connectedness {:.4f}, horizon {}, layout from {}\n", s.table.total, s.table.horizon,
                     s.provenance.layout_source);
  out += fmt::format("{:<12} {:>10} {:>10} {:>10}\n", "firm", "to", "from", "net");
  for (std::size_t i = 0; i < s.table.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    out += fmt::format("{:<12} {:>10.4f} {:>10.4f} {:>10.4f}\n", s.table.firms[i], s.table.to_others(k),
                       s.table.from_others(k), s.table.net(k));
  }
  out += '\n' + fevd::format_table_csv(s.table);
  return out;
}

}  // namespace volnet::cli
