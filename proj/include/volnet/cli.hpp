#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "volnet/fevd.hpp"
#include "volnet/ingest.hpp"
#include "volnet/rolling.hpp"

namespace volnet::cli {

// ---------------------------------------------------------------------------
// Rendering

enum class ColorBy { kRegion, kStateOwned, kCustom };
enum class SizeBy { kTo, kFrom, kNet, kUniform };

struct RenderSpec {
  ColorBy color_by = ColorBy::kRegion;
  SizeBy size_by = SizeBy::kTo;
  double size_scale = 0.1;
  bool label_nodes = true;
  /// Category -> color. Empty means the built-in palette for color_by.
  std::map<std::string, std::string> palette;
  /// Ticker -> category, used with ColorBy::kCustom.
  std::map<std::string, std::string> custom_categories;
};

inline constexpr double kMinRadius = 2.0;

/// Category label of every firm under `spec.color_by`, in table order.
std::vector<std::string> node_categories(const rolling::NetworkSnapshot& snapshot, const RenderSpec& spec);

/// r = kMinRadius + size_scale * (measure - floor); floor is 0 for to/from
/// and the smallest value for net, so every radius is at least kMinRadius.
std::vector<double> node_radii(const fevd::ConnectednessTable& table, const RenderSpec& spec);

/// Deterministic SVG of one snapshot. Throws ValidationError if the palette
/// misses a category.
std::string render_svg(const rolling::NetworkSnapshot& snapshot, const RenderSpec& spec);
/// Graphviz digraph with pinned positions and directed edge weights.
std::string render_dot(const rolling::NetworkSnapshot& snapshot, const RenderSpec& spec);

// ---------------------------------------------------------------------------
// Event studies

struct EventStudySpec {
  Date before;
  Date after;
  std::vector<Date> intermediate;
  std::set<fevd::Measure> measures{fevd::Measure::kTo, fevd::Measure::kFrom, fevd::Measure::kNet};
  bool price_direction = true;  // only used when a price panel is supplied
  std::size_t top_k = 5;
};

enum class PriceMove { kUp, kDown, kFlat, kMissing };
std::string_view to_string(PriceMove move);

struct GroupSummary {
  std::string group;  // e.g. "region=south", "ownership=private", "position=periphery"
  std::size_t firms = 0;
  fevd::DirectionCounts to;
  fevd::DirectionCounts from;
  fevd::DirectionCounts net;
  fevd::DirectionCounts price;
};

struct PairReport {
  Date from_date;
  Date to_date;
  fevd::ConnectednessTable before;
  fevd::ConnectednessTable after;
  fevd::TableDiff diff;
  std::vector<bool> periphery;               // table order, from the later snapshot's layout
  std::vector<PriceMove> price;              // table order; empty without a price panel
  std::vector<GroupSummary> groups;
};

struct EventStudyReport {
  std::vector<PairReport> pairs;
  std::vector<std::string> price_mismatches;
  std::string text;
  std::string csv;
};

/// Periphery flags: distance from the centroid above the 70th percentile
/// (linear interpolation) of all node distances.
std::vector<bool> periphery_flags(const layout::Positions& positions, double percentile = 0.7);

/// Closing-price direction between two dates using the last bar on or before
/// each date.
PriceMove price_move(const std::vector<ingest::OhlcBar>& bars, const Date& from, const Date& to);

EventStudyReport event_study(const std::filesystem::path& store, const EventStudySpec& spec,
                             const std::optional<ingest::SeriesMap>& prices = std::nullopt);

// ---------------------------------------------------------------------------
// Commands

struct CleanInputs {
  std::filesystem::path ohlc;
  std::filesystem::path metadata;
  std::filesystem::path calendar;
  ingest::ColumnMapping schema;
  ingest::FilterRules rules;
  ingest::ImputeOptions impute;
};

struct CleanResult {
  ingest::VolatilityPanel panel;
  std::vector<ingest::Diagnostic> diagnostics;
  std::vector<ingest::ParentLink> links;
  std::size_t clamped = 0;
  std::size_t filled_cells = 0;
};

/// load_ohlc -> filter_universe -> apply_calendar -> Garman-Klass -> impute_and_log.
CleanResult clean(const CleanInputs& inputs);
/// clean() plus writing the panel and the diagnostic report.
CleanResult cmd_clean(const CleanInputs& inputs, const std::filesystem::path& panel_out,
                      const std::filesystem::path& report_out);

/// "<date> total=<x> median_nonzero=<l1>/<l2>/... [DEGRADED]"
std::string summary_line(const rolling::NetworkSnapshot& snapshot);

rolling::PipelineSummary cmd_run(const std::filesystem::path& panel_path,
                                 const rolling::RollingConfig& cfg,
                                 const std::filesystem::path& store,
                                 const std::optional<std::filesystem::path>& metadata,
                                 std::ostream& out, bool write_traces = false,
                                 bool dump_coefficients = false);

struct RenderOutput {
  std::filesystem::path svg;
  std::filesystem::path dot;
};

RenderOutput cmd_render(const std::filesystem::path& store, const Date& date, const RenderSpec& spec,
                        const std::filesystem::path& out_dir);

EventStudyReport cmd_event_study(const std::filesystem::path& store, const EventStudySpec& spec,
                                 const std::optional<std::filesystem::path>& price_panel,
                                 const std::optional<std::filesystem::path>& csv_out);

std::string cmd_inspect(const std::filesystem::path& store, const Date& date);

}  // namespace volnet::cli
