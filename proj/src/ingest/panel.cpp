#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "volnet/csv.hpp"
#include "volnet/digest.hpp"
#include "volnet/errors.hpp"
#include "volnet/ingest.hpp"

namespace volnet::ingest {

AlignedSeries apply_calendar(const SeriesMap& series, const TradingCalendar& calendar) {
  if (calendar.empty()) throw ValidationError("trading calendar is empty");
  const auto& days = calendar.dates();
  AlignedSeries out;
  out.dates = days;
  for (const auto& [ticker, bars] : series) {
    std::vector<std::optional<OhlcBar>> aligned(days.size());
    std::size_t present = 0;
    for (const auto& bar : bars) {
      auto it = std::lower_bound(days.begin(), days.end(), bar.date);
      if (it != days.end() && *it == bar.date) {
        aligned[static_cast<std::size_t>(it - days.begin())] = bar;
        ++present;
      }
    }
    if (present == 0) {
      out.flagged.push_back({ticker, "empty_after_calendar", "no bars on any calendar day"});
      continue;
    }
    out.gap_counts[ticker] = days.size() - present;
    out.bars.emplace(ticker, std::move(aligned));
  }
  return out;
}

double garman_klass_raw(const OhlcBar& bar) {
  const double range = std::log(bar.high / bar.low);
  const double body = std::log(bar.close / bar.open);
  return 0.5 * range * range - (2.0 * std::numbers::ln2 - 1.0) * body * body;
}

VarianceEstimate garman_klass_checked(const OhlcBar& bar) {
  const double v = garman_klass_raw(bar);
  if (v < 0.0) return {std::numeric_limits<double>::min(), true};
  return {v, false};
}

double garman_klass(const OhlcBar& bar) { return garman_klass_checked(bar).value; }

VarianceGrid variance_grid(const AlignedSeries& aligned) {
  VarianceGrid grid;
  grid.dates = aligned.dates;
  for (const auto& [ticker, bars] : aligned.bars) grid.firms.push_back(ticker);
  grid.values.resize(static_cast<Eigen::Index>(grid.dates.size()),
                     static_cast<Eigen::Index>(grid.firms.size()));
  Eigen::Index col = 0;
  for (const auto& [ticker, bars] : aligned.bars) {
    for (std::size_t t = 0; t < bars.size(); ++t) {
      double v = std::numeric_limits<double>::quiet_NaN();
      if (bars[t]) {
        auto est = garman_klass_checked(*bars[t]);
        v = est.value;
        grid.clamped_count += est.clamped ? 1 : 0;
      }
      grid.values(static_cast<Eigen::Index>(t), col) = v;
    }
    ++col;
  }
  return grid;
}

ImputeResult impute_and_log(const VarianceGrid& grid, const ImputeOptions& options) {
  const auto rows = grid.values.rows();
  ImputeResult result;
  result.panel.dates = grid.dates;
  std::vector<Eigen::Index> kept;
  std::vector<Eigen::VectorXd> filled_columns;

  auto missing = [](double v) { return !(v > 0.0); };  // NaN, zero or negative

  for (Eigen::Index j = 0; j < grid.values.cols(); ++j) {
    const auto& ticker = grid.firms[static_cast<std::size_t>(j)];
    Eigen::VectorXd col = grid.values.col(j);
    if (rows == 0) continue;
    if (missing(col(0))) {
      result.dropped.push_back({ticker, "leading_gap", "first value missing or zero; nothing to carry forward"});
      continue;
    }
    std::size_t run = 0;
    std::size_t longest = 0;
    Eigen::Index longest_start = 0;
    std::size_t filled = 0;
    for (Eigen::Index t = 1; t < rows; ++t) {
      if (missing(col(t))) {
        ++run;
        if (run > longest) {
          longest = run;
          longest_start = t - static_cast<Eigen::Index>(run) + 1;
        }
        col(t) = col(t - 1);
        ++filled;
      } else {
        run = 0;
      }
    }
    if (longest > options.max_fill_run) {
      result.dropped.push_back(
          {ticker, "long_gap_run",
           fmt::format("{} consecutive missing/zero days starting {} (limit {})", longest,
                       format_date(grid.dates[static_cast<std::size_t>(longest_start)]),
                       options.max_fill_run)});
      continue;
    }
    result.filled_cells += filled;
    kept.push_back(j);
    filled_columns.push_back(std::move(col));
  }

  result.panel.values.resize(rows, static_cast<Eigen::Index>(kept.size()));
  for (std::size_t k = 0; k < kept.size(); ++k) {
    result.panel.firms.push_back(grid.firms[static_cast<std::size_t>(kept[k])]);
    result.panel.values.col(static_cast<Eigen::Index>(k)) = filled_columns[k].array().log().matrix();
  }
  return result;
}

std::string format_panel(const VolatilityPanel& panel) {
  std::string out = "# volnet-panel v1\n";
  std::vector<std::string> header{"date"};
  header.insert(header.end(), panel.firms.begin(), panel.firms.end());
  out += csv::join(header);
  out += '\n';
  for (std::size_t t = 0; t < panel.dates.size(); ++t) {
    out += format_date(panel.dates[t]);
    for (Eigen::Index j = 0; j < panel.values.cols(); ++j) {
      out += ',';
      out += csv::format_double(panel.values(static_cast<Eigen::Index>(t), j));
    }
    out += '\n';
  }
  return out;
}

void write_panel(const std::filesystem::path& path, const VolatilityPanel& panel) {
  write_text_file(path, format_panel(panel));
}

VolatilityPanel parse_panel(std::string_view text) {
  if (!text.starts_with("# volnet-panel v1")) {
    throw ValidationError("panel file lacks the '# volnet-panel v1' version line");
  }
  const auto doc = csv::parse(text);
  if (doc.header.empty() || doc.header.front() != "date") {
    throw ValidationError("panel header must start with 'date'");
  }
  VolatilityPanel panel;
  panel.firms.assign(doc.header.begin() + 1, doc.header.end());
  const auto n = static_cast<Eigen::Index>(panel.firms.size());
  panel.values.resize(static_cast<Eigen::Index>(doc.rows.size()), n);
  for (std::size_t t = 0; t < doc.rows.size(); ++t) {
    const auto& row = doc.rows[t];
    if (row.fields.size() != panel.firms.size() + 1) {
      throw ValidationError(fmt::format("panel line {}: expected {} fields, got {}", row.line,
                                        panel.firms.size() + 1, row.fields.size()));
    }
    panel.dates.push_back(parse_date_or_throw(row.fields[0]));
    for (Eigen::Index j = 0; j < n; ++j) {
      auto v = csv::parse_double(row.fields[static_cast<std::size_t>(j) + 1]);
      if (!v || !std::isfinite(*v)) {
        throw ValidationError(fmt::format("panel line {}: non-finite value for {}", row.line,
                                          panel.firms[static_cast<std::size_t>(j)]));
      }
      panel.values(static_cast<Eigen::Index>(t), j) = *v;
    }
    if (t > 0 && !(panel.dates[t - 1] < panel.dates[t])) {
      throw ValidationError(fmt::format("panel line {}: dates not strictly increasing", row.line));
    }
  }
  return panel;
}

VolatilityPanel read_panel(const std::filesystem::path& path) {
  return parse_panel(read_text_file(path));
}

}  // namespace volnet::ingest
