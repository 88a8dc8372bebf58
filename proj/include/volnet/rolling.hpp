#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "volnet/date.hpp"
#include "volnet/fevd.hpp"
#include "volnet/ingest.hpp"
#include "volnet/layout.hpp"
#include "volnet/varnet.hpp"

namespace volnet::rolling {

struct RollingConfig {
  std::size_t window_length = 100;
  std::size_t lags = 3;
  std::size_t horizon = 10;
  double alpha = 0.5;
  std::size_t folds = 10;
  std::size_t layout_iterations = 600;
  std::uint64_t seed = 1;

  std::size_t grid_size = 100;
  double grid_ratio = 1e-4;

  double repulsion_scale = 10.0;
  double edge_weight_influence = 1.0;
  double swing_tolerance = 1.0;
  bool adaptive_tolerance = false;
  double speed_constant = 1.0;
  bool prevent_overlap = false;
  layout::DegreeConvention degree_convention = layout::DegreeConvention::kNodeCount;

  /// Worker threads for window estimation; 0 means hardware concurrency.
  /// Does not affect results and is excluded from the config hash.
  std::size_t threads = 0;

  layout::LayoutParams layout_params() const;
  varnet::VarFitOptions fit_options() const;
};

inline constexpr int kConfigSchemaVersion = 1;

/// Every problem with the configuration, empty when valid.
std::vector<std::string> validation_errors(const RollingConfig& cfg);
/// Throws ValidationError listing all problems at once.
void validate(const RollingConfig& cfg);

/// Flat "key = value" text with a schema_version line. Unknown keys and
/// malformed values are collected and thrown together as ValidationError.
RollingConfig parse_config(std::string_view text, RollingConfig base = {});
RollingConfig load_config(const std::filesystem::path& path, RollingConfig base = {});
/// Canonical text of every result-affecting setting.
std::string format_config(const RollingConfig& cfg);
std::string config_hash(const RollingConfig& cfg);

struct WindowRange {
  std::size_t start = 0;  // inclusive row index
  std::size_t end = 0;    // inclusive row index; the snapshot date

  bool operator==(const WindowRange&) const = default;
};

/// Windows [t - w + 1, t] for every t >= w - 1, one trading day apart.
/// Throws ValidationError if the panel is shorter than the window.
std::vector<WindowRange> enumerate_windows(std::size_t num_dates, const RollingConfig& cfg);

struct NodeAttributes {
  std::string region;
  bool state_owned = false;
  std::optional<std::string> parent_ticker;

  bool operator==(const NodeAttributes&) const = default;
};

std::map<std::string, NodeAttributes> node_attributes(const std::vector<ingest::FirmMeta>& meta);

struct ModelSummary {
  std::size_t lags = 0;
  double alpha = 0.0;
  std::vector<varnet::EquationSummary> equations;  // table firm order

  /// Median nonzero coefficient count per lag across equations.
  std::vector<double> median_nonzero_per_lag() const;
};

struct Provenance {
  std::string config_hash;
  Date window_start;
  Date window_end;
  std::string window_digest;
  bool degraded = false;
  std::string failure;
  std::string layout_source;  // "random", "previous" or "carried"
  std::optional<std::uint64_t> layout_seed;
  std::optional<Date> previous_date;
  std::string initial_layout_digest;
  std::string final_layout_digest;
  std::optional<std::size_t> layout_converged_at;
};

struct NetworkSnapshot {
  Date date;
  fevd::ConnectednessTable table;
  layout::Positions layout;  // table firm order
  ModelSummary model;
  Provenance provenance;
  std::map<std::string, NodeAttributes> nodes;
};

/// Digest of a position list, used to chain layouts across dates.
std::string positions_digest(const layout::Positions& positions);

// ---------------------------------------------------------------------------
// Snapshot store: <root>/<ISO-date>/{table.csv, layout.json, model.json, meta.json}

inline constexpr int kSnapshotFormatVersion = 1;

void store_snapshot(const NetworkSnapshot& snapshot, const std::filesystem::path& root);
/// Throws NotFoundError when the date is absent and CorruptDataError when a
/// checksum or parse fails.
NetworkSnapshot load_snapshot(const Date& date, const std::filesystem::path& root);
bool snapshot_exists(const Date& date, const std::filesystem::path& root);
std::vector<Date> list_snapshot_dates(const std::filesystem::path& root);
void remove_snapshot(const Date& date, const std::filesystem::path& root);

// ---------------------------------------------------------------------------
// Pipeline

struct WindowFailure {
  Date date;
  std::string message;
};

struct PipelineSummary {
  std::size_t windows = 0;
  std::size_t computed = 0;
  std::size_t reused = 0;  // loaded from the store on resume
  std::vector<WindowFailure> failures;
};

struct PipelineOptions {
  /// Snapshot directory; results are only streamed when absent.
  std::optional<std::filesystem::path> store;
  bool resume = true;
  /// Write layout convergence traces as trace.csv next to each snapshot.
  bool write_traces = false;
  /// Write coefficients.csv (nonzero VAR coefficients) next to each snapshot.
  bool dump_coefficients = false;
  std::function<void(const NetworkSnapshot&)> on_snapshot;
};

/// Fits every window, builds its connectedness table, lays it out starting
/// from the previous date's final positions, and emits snapshots in date
/// order. Estimation runs in parallel; layout runs sequentially.
PipelineSummary run_pipeline(const ingest::VolatilityPanel& panel,
                             const std::map<std::string, NodeAttributes>& nodes,
                             const RollingConfig& cfg, const PipelineOptions& options = {});

}  // namespace volnet::rolling
