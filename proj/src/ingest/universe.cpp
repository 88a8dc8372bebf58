#include <algorithm>
#include <map>
#include <set>

#include <fmt/format.h>

#include "volnet/errors.hpp"
#include "volnet/ingest.hpp"

namespace volnet::ingest {

namespace {

std::int64_t total_volume(const std::vector<OhlcBar>& bars) {
  std::int64_t total = 0;
  for (const auto& b : bars) total += b.volume;
  return total;
}

}  // namespace

UniverseFilterResult filter_universe(const SeriesMap& firms, const std::vector<FirmMeta>& meta,
                                     const FilterRules& rules) {
  std::map<std::string, const FirmMeta*> by_ticker;
  for (const auto& m : meta) by_ticker[m.ticker] = &m;
  for (const auto& [ticker, bars] : firms) {
    if (!by_ticker.contains(ticker)) {
      throw ValidationError(fmt::format("ticker '{}' has no metadata", ticker));
    }
  }

  UniverseFilterResult result;
  std::set<std::string> dropped;

  if (rules.drop_b_shares) {
    for (const auto& [ticker, bars] : firms) {
      if (by_ticker.at(ticker)->share_class == ShareClass::kB) {
        dropped.insert(ticker);
        result.exclusions.push_back({ticker, "b_share", "B-share listing removed"});
      }
    }
  }

  if (rules.dedupe_dual_listings) {
    std::map<std::string, std::vector<std::string>> by_name;
    for (const auto& [ticker, bars] : firms) {
      const auto& name = by_ticker.at(ticker)->name;
      if (!name.empty() && !dropped.contains(ticker)) by_name[name].push_back(ticker);
    }
    for (const auto& [name, listings] : by_name) {
      if (listings.size() < 2) continue;
      // Listings tied by a parent/child relation are separate entities.
      std::vector<std::string> candidates;
      for (const auto& t : listings) {
        const bool linked = std::any_of(listings.begin(), listings.end(), [&](const std::string& other) {
          const auto& a = *by_ticker.at(t);
          const auto& b = *by_ticker.at(other);
          return (a.parent_ticker && *a.parent_ticker == other) ||
                 (b.parent_ticker && *b.parent_ticker == t);
        });
        if (!linked) candidates.push_back(t);
      }
      if (candidates.size() < 2) continue;
      // Listings are visited in ticker order, so ties keep the smallest ticker.
      std::string keep = candidates.front();
      std::int64_t keep_volume = total_volume(firms.at(keep));
      for (const auto& t : candidates) {
        const auto v = total_volume(firms.at(t));
        if (v > keep_volume) {
          keep = t;
          keep_volume = v;
        }
      }
      for (const auto& t : candidates) {
        if (t == keep) continue;
        dropped.insert(t);
        result.exclusions.push_back(
            {t, "dual_listing",
             fmt::format("duplicate listing of '{}'; kept {} (volume {} vs {})", name, keep,
                         keep_volume, total_volume(firms.at(t)))});
      }
    }
  }

  for (const auto& [ticker, bars] : firms) {
    if (!dropped.contains(ticker)) result.series.emplace(ticker, bars);
  }
  for (const auto& [ticker, bars] : result.series) {
    const auto& m = *by_ticker.at(ticker);
    if (m.parent_ticker && result.series.contains(*m.parent_ticker)) {
      result.links.push_back({ticker, *m.parent_ticker});
    }
  }
  return result;
}

}  // namespace volnet::ingest
