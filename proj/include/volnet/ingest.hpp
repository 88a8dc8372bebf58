#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "volnet/date.hpp"

namespace volnet::ingest {

// ---------------------------------------------------------------------------
// Domain types

struct OhlcBar {
  Date date;
  double open = 0.0;
  double high = 0.0;
  double low = 0.0;
  double close = 0.0;
  std::int64_t volume = 0;
};

/// Returns an empty string when the bar is valid, otherwise a description of
/// the first violated invariant.
std::string check_bar(const OhlcBar& bar);

enum class Region { kNorth, kSouth, kEast, kNortheast, kNorthwest, kSouthwest };
enum class ShareClass { kA, kB, kH };

std::optional<Region> parse_region(std::string_view token);
std::string_view to_string(Region region);
std::optional<ShareClass> parse_share_class(std::string_view token);
std::string_view to_string(ShareClass share_class);

struct FirmMeta {
  std::string ticker;
  std::string name;
  Region region = Region::kNorth;
  bool state_owned = false;
  std::optional<std::string> parent_ticker;
  ShareClass share_class = ShareClass::kA;
};

/// Trading days retained for analysis, strictly increasing.
class TradingCalendar {
 public:
  TradingCalendar() = default;
  /// Throws ValidationError if dates are not strictly increasing.
  explicit TradingCalendar(std::vector<Date> dates);

  const std::vector<Date>& dates() const { return dates_; }
  std::size_t size() const { return dates_.size(); }
  bool empty() const { return dates_.empty(); }
  bool contains(const Date& date) const;

 private:
  std::vector<Date> dates_;
};

/// Dates x firms matrix of log variances; the VAR input.
struct VolatilityPanel {
  std::vector<Date> dates;
  std::vector<std::string> firms;
  Eigen::MatrixXd values;  // dates.size() x firms.size()

  std::size_t num_dates() const { return dates.size(); }
  std::size_t num_firms() const { return firms.size(); }
};

/// One line of the exclusion/diagnostic report: (ticker, rule, detail).
struct Diagnostic {
  std::string ticker;
  std::string rule;
  std::string detail;

  bool operator==(const Diagnostic&) const = default;
};

using SeriesMap = std::map<std::string, std::vector<OhlcBar>>;

// ---------------------------------------------------------------------------
// Loading

/// Column names for the OHLC input file.
struct ColumnMapping {
  std::string date = "date";
  std::string ticker = "ticker";
  std::string open = "open";
  std::string high = "high";
  std::string low = "low";
  std::string close = "close";
  std::string volume = "volume";  // optional column; volume defaults to 0 when absent
};

struct OhlcLoadResult {
  SeriesMap series;
  std::vector<Diagnostic> rejects;
};

/// Loads a long-format OHLC CSV. Rows that fail to parse or violate the bar
/// invariants are rejected with one diagnostic each; duplicate (ticker, date)
/// rows keep the first occurrence. Throws IoError if the file is unreadable
/// and ValidationError if a required column is missing.
OhlcLoadResult load_ohlc(const std::filesystem::path& path, const ColumnMapping& schema = {});
OhlcLoadResult parse_ohlc(std::string_view text, const ColumnMapping& schema = {});

/// Loads firm metadata; enforces unique tickers and resolvable parents.
std::vector<FirmMeta> load_metadata(const std::filesystem::path& path);
std::vector<FirmMeta> parse_metadata(std::string_view text);
void validate_metadata(const std::vector<FirmMeta>& meta);

/// One ISO date per line; '#' comments and blank lines allowed.
TradingCalendar load_calendar(const std::filesystem::path& path);
TradingCalendar parse_calendar(std::string_view text);

void write_diagnostics(const std::filesystem::path& path, const std::vector<Diagnostic>& diagnostics);
std::string format_diagnostics(const std::vector<Diagnostic>& diagnostics);

// ---------------------------------------------------------------------------
// Universe filtering

struct FilterRules {
  bool drop_b_shares = true;
  /// Keep only the higher-volume listing among A/H listings of one enterprise.
  bool dedupe_dual_listings = true;
};

struct ParentLink {
  std::string child;
  std::string parent;

  bool operator==(const ParentLink&) const = default;
};

struct UniverseFilterResult {
  SeriesMap series;
  std::vector<Diagnostic> exclusions;
  std::vector<ParentLink> links;
};

/// Removes B-share listings and duplicate A/H listings of the same enterprise.
/// Listings belong to the same enterprise when their metadata names match;
/// listings linked through parent_ticker are distinct entities and are both
/// kept. Throws ValidationError when a ticker in `firms` has no metadata.
UniverseFilterResult filter_universe(const SeriesMap& firms, const std::vector<FirmMeta>& meta,
                                     const FilterRules& rules = {});

// ---------------------------------------------------------------------------
// Calendar alignment

/// Per-firm bars aligned to calendar days; std::nullopt marks a gap.
struct AlignedSeries {
  std::vector<Date> dates;
  std::map<std::string, std::vector<std::optional<OhlcBar>>> bars;
  std::map<std::string, std::size_t> gap_counts;
  /// Firms with no bars left on calendar days. They are removed from `bars`
  /// and reported here.
  std::vector<Diagnostic> flagged;
};

AlignedSeries apply_calendar(const SeriesMap& series, const TradingCalendar& calendar);

// ---------------------------------------------------------------------------
// Volatility

/// Classic Garman-Klass daily variance from log prices:
///   0.5 * ln(H/L)^2 - (2 ln 2 - 1) * ln(C/O)^2
/// Raw value; may be negative only for bars violating the OHLC invariants.
double garman_klass_raw(const OhlcBar& bar);

struct VarianceEstimate {
  double value = 0.0;
  bool clamped = false;
};

/// Garman-Klass variance with negative outputs clamped to the smallest
/// positive normal double.
VarianceEstimate garman_klass_checked(const OhlcBar& bar);
double garman_klass(const OhlcBar& bar);

/// Dates x firms variance matrix; NaN marks a gap.
struct VarianceGrid {
  std::vector<Date> dates;
  std::vector<std::string> firms;
  Eigen::MatrixXd values;
  std::size_t clamped_count = 0;
};

VarianceGrid variance_grid(const AlignedSeries& aligned);

struct ImputeOptions {
  /// Longest run of gaps/zero variances that is carried forward; firms with a
  /// longer run are dropped.
  std::size_t max_fill_run = 9;
};

struct ImputeResult {
  VolatilityPanel panel;
  std::vector<Diagnostic> dropped;
  std::size_t filled_cells = 0;
};

/// Fills short gap/zero runs by carrying the last positive variance forward,
/// drops firms with long runs or a leading gap, and takes natural logs.
ImputeResult impute_and_log(const VarianceGrid& grid, const ImputeOptions& options = {});

// ---------------------------------------------------------------------------
// Panel file (versioned CSV: "# volnet-panel v1", header date,<tickers...>)

void write_panel(const std::filesystem::path& path, const VolatilityPanel& panel);
std::string format_panel(const VolatilityPanel& panel);
VolatilityPanel read_panel(const std::filesystem::path& path);
VolatilityPanel parse_panel(std::string_view text);

}  // namespace volnet::ingest
