#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "volnet/csv.hpp"
#include "volnet/digest.hpp"
#include "volnet/errors.hpp"
#include "volnet/ingest.hpp"

namespace volnet::ingest {

std::string check_bar(const OhlcBar& bar) {
  for (double p : {bar.open, bar.high, bar.low, bar.close}) {
    if (!std::isfinite(p)) return "non-finite price";
  }
  if (bar.low <= 0.0) return fmt::format("non-positive price (low={})", bar.low);
  if (bar.low > std::min(bar.open, bar.close)) {
    return fmt::format("low {} above min(open, close)", bar.low);
  }
  if (bar.high < std::max(bar.open, bar.close)) {
    return fmt::format("high {} below max(open, close)", bar.high);
  }
  if (bar.volume < 0) return "negative volume";
  return {};
}

namespace {

constexpr std::pair<std::string_view, Region> kRegions[] = {
    {"north", Region::kNorth},         {"south", Region::kSouth},
    {"east", Region::kEast},           {"northeast", Region::kNortheast},
    {"northwest", Region::kNorthwest}, {"southwest", Region::kSouthwest},
};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::optional<bool> parse_bool(std::string_view token) {
  const auto t = lower(csv::trim(token));
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  return std::nullopt;
}

std::optional<std::int64_t> parse_volume(std::string_view text) {
  const auto t = csv::trim(text);
  if (t.empty()) return std::int64_t{0};
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec == std::errc() && ptr == t.data() + t.size()) return v;
  // Some vendors export volume as a float ("1234.0").
  auto d = csv::parse_double(t);
  if (d && *d == std::floor(*d) && std::abs(*d) < 9.2e18) return static_cast<std::int64_t>(*d);
  return std::nullopt;
}

std::size_t require_column(const csv::Document& doc, const std::string& name, std::string_view file) {
  auto idx = doc.column(name);
  if (!idx) throw ValidationError(fmt::format("{}: missing required column '{}'", file, name));
  return *idx;
}

}  // namespace

std::optional<Region> parse_region(std::string_view token) {
  const auto t = lower(csv::trim(token));
  for (const auto& [name, region] : kRegions) {
    if (t == name) return region;
  }
  return std::nullopt;
}

std::string_view to_string(Region region) {
  for (const auto& [name, r] : kRegions) {
    if (r == region) return name;
  }
  return "unknown";
}

std::optional<ShareClass> parse_share_class(std::string_view token) {
  const auto t = csv::trim(token);
  if (t == "A" || t == "a") return ShareClass::kA;
  if (t == "B" || t == "b") return ShareClass::kB;
  if (t == "H" || t == "h") return ShareClass::kH;
  return std::nullopt;
}

std::string_view to_string(ShareClass share_class) {
  switch (share_class) {
    case ShareClass::kA: return "A";
    case ShareClass::kB: return "B";
    case ShareClass::kH: return "H";
  }
  return "?";
}

TradingCalendar::TradingCalendar(std::vector<Date> dates) : dates_(std::move(dates)) {
  for (std::size_t i = 1; i < dates_.size(); ++i) {
    if (!(dates_[i - 1] < dates_[i])) {
      throw ValidationError(fmt::format("calendar dates must be strictly increasing ({} then {})",
                                        format_date(dates_[i - 1]), format_date(dates_[i])));
    }
  }
}

bool TradingCalendar::contains(const Date& date) const {
  return std::binary_search(dates_.begin(), dates_.end(), date);
}

OhlcLoadResult parse_ohlc(std::string_view text, const ColumnMapping& schema) {
  const auto doc = csv::parse(text);
  const auto c_date = require_column(doc, schema.date, "OHLC");
  const auto c_ticker = require_column(doc, schema.ticker, "OHLC");
  const auto c_open = require_column(doc, schema.open, "OHLC");
  const auto c_high = require_column(doc, schema.high, "OHLC");
  const auto c_low = require_column(doc, schema.low, "OHLC");
  const auto c_close = require_column(doc, schema.close, "OHLC");
  const auto c_volume = doc.column(schema.volume);

  OhlcLoadResult result;
  std::map<std::string, std::set<Date>> seen;
  for (const auto& row : doc.rows) {
    const auto& f = row.fields;
    auto reject = [&](std::string ticker, std::string detail) {
      result.rejects.push_back({std::move(ticker), "row_rejected",
                                fmt::format("line {}: {}", row.line, detail)});
    };
    const std::size_t needed = std::max({c_date, c_ticker, c_open, c_high, c_low, c_close,
                                         c_volume.value_or(0)}) + 1;
    if (f.size() < needed) {
      reject(f.size() > c_ticker ? f[c_ticker] : "", "too few fields");
      continue;
    }
    const std::string& ticker = f[c_ticker];
    if (ticker.empty()) {
      reject("", "empty ticker");
      continue;
    }
    auto date = parse_date(csv::trim(f[c_date]));
    if (!date) {
      reject(ticker, fmt::format("unparseable date '{}'", f[c_date]));
      continue;
    }
    auto open = csv::parse_double(f[c_open]);
    auto high = csv::parse_double(f[c_high]);
    auto low = csv::parse_double(f[c_low]);
    auto close = csv::parse_double(f[c_close]);
    if (!open || !high || !low || !close) {
      reject(ticker, "unparseable price");
      continue;
    }
    auto volume = c_volume ? parse_volume(f[*c_volume]) : std::optional<std::int64_t>{0};
    if (!volume) {
      reject(ticker, fmt::format("unparseable volume '{}'", f[*c_volume]));
      continue;
    }
    OhlcBar bar{*date, *open, *high, *low, *close, *volume};
    if (auto problem = check_bar(bar); !problem.empty()) {
      reject(ticker, problem);
      continue;
    }
    if (!seen[ticker].insert(*date).second) {
      reject(ticker, fmt::format("duplicate date {}", format_date(*date)));
      continue;
    }
    result.series[ticker].push_back(bar);
  }
  for (auto& [ticker, bars] : result.series) {
    std::stable_sort(bars.begin(), bars.end(),
                     [](const OhlcBar& a, const OhlcBar& b) { return a.date < b.date; });
  }
  return result;
}

OhlcLoadResult load_ohlc(const std::filesystem::path& path, const ColumnMapping& schema) {
  return parse_ohlc(read_text_file(path), schema);
}

std::vector<FirmMeta> parse_metadata(std::string_view text) {
  const auto doc = csv::parse(text);
  const auto c_ticker = require_column(doc, "ticker", "metadata");
  const auto c_name = doc.column("name");
  const auto c_region = require_column(doc, "region", "metadata");
  const auto c_state = require_column(doc, "state_owned", "metadata");
  const auto c_parent = doc.column("parent_ticker");
  const auto c_class = require_column(doc, "share_class", "metadata");

  std::vector<FirmMeta> meta;
  for (const auto& row : doc.rows) {
    const auto& f = row.fields;
    auto at = [&](std::optional<std::size_t> idx) -> std::string {
      return idx && *idx < f.size() ? f[*idx] : std::string{};
    };
    FirmMeta m;
    m.ticker = at(c_ticker);
    if (m.ticker.empty()) throw ValidationError(fmt::format("metadata line {}: empty ticker", row.line));
    m.name = at(c_name);
    auto region = parse_region(at(c_region));
    if (!region) {
      throw ValidationError(fmt::format("metadata line {}: unknown region '{}'", row.line, at(c_region)));
    }
    m.region = *region;
    auto state = parse_bool(at(c_state));
    if (!state) {
      throw ValidationError(
          fmt::format("metadata line {}: state_owned must be true/false, got '{}'", row.line, at(c_state)));
    }
    m.state_owned = *state;
    if (auto parent = at(c_parent); !parent.empty()) m.parent_ticker = parent;
    auto share_class = parse_share_class(at(c_class));
    if (!share_class) {
      throw ValidationError(
          fmt::format("metadata line {}: share_class must be A, B or H, got '{}'", row.line, at(c_class)));
    }
    m.share_class = *share_class;
    meta.push_back(std::move(m));
  }
  validate_metadata(meta);
  return meta;
}

void validate_metadata(const std::vector<FirmMeta>& meta) {
  std::set<std::string> tickers;
  for (const auto& m : meta) {
    if (!tickers.insert(m.ticker).second) {
      throw ValidationError(fmt::format("duplicate ticker '{}' in metadata", m.ticker));
    }
  }
  for (const auto& m : meta) {
    if (m.parent_ticker && !tickers.contains(*m.parent_ticker)) {
      throw ValidationError(
          fmt::format("ticker '{}' names unknown parent '{}'", m.ticker, *m.parent_ticker));
    }
    if (m.parent_ticker && *m.parent_ticker == m.ticker) {
      throw ValidationError(fmt::format("ticker '{}' is its own parent", m.ticker));
    }
  }
}

std::vector<FirmMeta> load_metadata(const std::filesystem::path& path) {
  return parse_metadata(read_text_file(path));
}

TradingCalendar parse_calendar(std::string_view text) {
  std::vector<Date> dates;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    const auto line = csv::trim(text.substr(pos, end - pos));
    pos = end + 1;
    if (line.empty() || line.front() == '#') continue;
    if (dates.empty() && line == "date") continue;
    auto date = parse_date(line);
    if (!date) throw ValidationError(fmt::format("calendar line {}: invalid date '{}'", line_no, line));
    dates.push_back(*date);
  }
  return TradingCalendar(std::move(dates));
}

TradingCalendar load_calendar(const std::filesystem::path& path) {
  return parse_calendar(read_text_file(path));
}

std::string format_diagnostics(const std::vector<Diagnostic>& diagnostics) {
  std::string out = "ticker,rule,detail\n";
  for (const auto& d : diagnostics) {
    out += csv::join({d.ticker, d.rule, d.detail});
    out += '\n';
  }
  return out;
}

void write_diagnostics(const std::filesystem::path& path, const std::vector<Diagnostic>& diagnostics) {
  write_text_file(path, format_diagnostics(diagnostics));
}

}  // namespace volnet::ingest
