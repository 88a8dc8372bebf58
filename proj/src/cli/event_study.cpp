#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "volnet/cli.hpp"
#include "volnet/csv.hpp"
#include "volnet/errors.hpp"

namespace volnet::cli {

std::string_view to_string(PriceMove move) {
  switch (move) {
    case PriceMove::kUp: return "up";
    case PriceMove::kDown: return "down";
    case PriceMove::kFlat: return "flat";
    case PriceMove::kMissing: return "missing";
  }
  return "?";
}

std::vector<bool> periphery_flags(const layout::Positions& positions, double percentile) {
  const std::size_t n = positions.size();
  std::vector<bool> flags(n, false);
  if (n < 2) return flags;
  layout::Vec2 centroid;
  for (const auto& p : positions) centroid += p;
  centroid = (1.0 / static_cast<double>(n)) * centroid;
  std::vector<double> distance(n);
  for (std::size_t i = 0; i < n; ++i) distance[i] = (positions[i] - centroid).norm();
  auto sorted = distance;
  std::sort(sorted.begin(), sorted.end());
  const double rank = percentile * static_cast<double>(n - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, n - 1);
  const double cutoff = sorted[lo] + (rank - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  for (std::size_t i = 0; i < n; ++i) flags[i] = distance[i] > cutoff;
  return flags;
}

PriceMove price_move(const std::vector<ingest::OhlcBar>& bars, const Date& from, const Date& to) {
  auto close_on_or_before = [&](const Date& d) -> std::optional<double> {
    auto it = std::upper_bound(bars.begin(), bars.end(), d,
                               [](const Date& date, const ingest::OhlcBar& b) { return date < b.date; });
    if (it == bars.begin()) return std::nullopt;
    return std::prev(it)->close;
  };
  const auto a = close_on_or_before(from);
  const auto b = close_on_or_before(to);
  if (!a || !b) return PriceMove::kMissing;
  if (*b > *a) return PriceMove::kUp;
  if (*b < *a) return PriceMove::kDown;
  return PriceMove::kFlat;
}

namespace {

void tally(fevd::DirectionCounts& c, double delta) {
  if (delta > 0.0) ++c.up;
  if (delta < 0.0) ++c.down;
}

std::vector<GroupSummary> summarize_groups(const PairReport& pair,
                                           const std::map<std::string, rolling::NodeAttributes>& nodes) {
  std::map<std::string, GroupSummary> groups;
  for (std::size_t i = 0; i < pair.diff.deltas.size(); ++i) {
    const auto& d = pair.diff.deltas[i];
    std::vector<std::string> keys;
    if (auto it = nodes.find(d.firm); it != nodes.end()) {
      keys.push_back("region=" + it->second.region);
      keys.push_back(std::string("ownership=") + (it->second.state_owned ? "state_owned" : "private"));
    }
    keys.push_back(std::string("position=") + (pair.periphery[i] ? "periphery" : "core"));
    for (const auto& key : keys) {
      auto& g = groups[key];
      g.group = key;
      ++g.firms;
      tally(g.to, d.to);
      tally(g.from, d.from);
      tally(g.net, d.net);
      if (!pair.price.empty()) {
        if (pair.price[i] == PriceMove::kUp) ++g.price.up;
        if (pair.price[i] == PriceMove::kDown) ++g.price.down;
      }
    }
  }
  // Ownership x position cross groups, e.g. private firms on the periphery.
  for (std::size_t i = 0; i < pair.diff.deltas.size(); ++i) {
    const auto& d = pair.diff.deltas[i];
    auto it = nodes.find(d.firm);
    if (it == nodes.end()) continue;
    const std::string key = fmt::format("ownership={},position={}",
                                        it->second.state_owned ? "state_owned" : "private",
                                        pair.periphery[i] ? "periphery" : "core");
    auto& g = groups[key];
    g.group = key;
    ++g.firms;
    tally(g.to, d.to);
    tally(g.from, d.from);
    tally(g.net, d.net);
    if (!pair.price.empty()) {
      if (pair.price[i] == PriceMove::kUp) ++g.price.up;
      if (pair.price[i] == PriceMove::kDown) ++g.price.down;
    }
  }
  std::vector<GroupSummary> out;
  for (auto& [key, g] : groups) out.push_back(std::move(g));
  return out;
}

std::string counts_text(const fevd::DirectionCounts& c) { return fmt::format("{} up, {} down", c.up, c.down); }

}  // namespace

EventStudyReport event_study(const std::filesystem::path& store, const EventStudySpec& spec,
                             const std::optional<ingest::SeriesMap>& prices) {
  if (!(spec.before < spec.after)) throw ValidationError("event study: before date must precede after date");
  std::vector<Date> dates{spec.before};
  dates.insert(dates.end(), spec.intermediate.begin(), spec.intermediate.end());
  dates.push_back(spec.after);
  for (std::size_t i = 1; i < dates.size(); ++i) {
    if (!(dates[i - 1] < dates[i])) throw ValidationError("event study dates must be strictly increasing");
  }
  std::vector<std::string> missing;
  for (const auto& d : dates) {
    if (!rolling::snapshot_exists(d, store)) missing.push_back(format_date(d));
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw NotFoundError(fmt::format("event study: no snapshot for {}", list));
  }
  std::vector<rolling::NetworkSnapshot> snaps;
  for (const auto& d : dates) snaps.push_back(rolling::load_snapshot(d, store));

  EventStudyReport report;
  const auto& firms = snaps.front().table.firms;
  if (prices) {
    for (const auto& f : firms) {
      if (!prices->contains(f)) report.price_mismatches.push_back(fmt::format("{}: not in price panel", f));
    }
    for (const auto& [ticker, bars] : *prices) {
      if (std::find(firms.begin(), firms.end(), ticker) == firms.end()) {
        report.price_mismatches.push_back(fmt::format("{}: not in snapshot", ticker));
      }
    }
  }

  std::string& text = report.text;
  std::vector<std::string> header{"from_date", "to_date", "ticker", "region", "ownership", "position",
                                  "to_before", "to_after", "to_delta", "from_before", "from_after",
                                  "from_delta", "net_before", "net_after", "net_delta"};
  if (prices && spec.price_direction) header.emplace_back("price_direction");
  report.csv = csv::join(header) + '\n';

  for (std::size_t k = 1; k < snaps.size(); ++k) {
    PairReport pair;
    pair.from_date = snaps[k - 1].date;
    pair.to_date = snaps[k].date;
    pair.before = snaps[k - 1].table;
    pair.after = snaps[k].table;
    pair.diff = fevd::table_diff(pair.before, pair.after);
    pair.periphery = periphery_flags(snaps[k].layout);
    if (prices && spec.price_direction) {
      for (const auto& f : firms) {
        auto it = prices->find(f);
        pair.price.push_back(it == prices->end() ? PriceMove::kMissing
                                                 : price_move(it->second, pair.from_date, pair.to_date));
      }
    }
    pair.groups = summarize_groups(pair, snaps[k].nodes);

    text += fmt::format("== {} -> {} ({} firms)\n", format_date(pair.from_date), format_date(pair.to_date),
                        firms.size());
    text += fmt::format("total connectedness: {:.4f} -> {:.4f} (delta {:+.4f})\n", pair.before.total,
                        pair.after.total, pair.diff.total_delta);
    for (auto m : spec.measures) {
      text += fmt::format("{}: {}\n", fevd::to_string(m), counts_text(pair.diff.counts(m)));
    }
    if (!pair.price.empty()) {
      fevd::DirectionCounts c;
      for (auto p : pair.price) {
        if (p == PriceMove::kUp) ++c.up;
        if (p == PriceMove::kDown) ++c.down;
      }
      text += fmt::format("price_direction: {}\n", counts_text(c));
    }
    for (auto m : spec.measures) {
      text += fmt::format("top {} movers ({}):", spec.top_k, fevd::to_string(m));
      for (const auto& d : pair.diff.top_movers(m, spec.top_k)) {
        text += fmt::format(" {} {:+.4f};", d.firm, d.get(m));
      }
      text += '\n';
    }
    for (const auto& g : pair.groups) {
      text += fmt::format("  [{}] n={} to: {} | from: {} | net: {}", g.group, g.firms, counts_text(g.to),
                          counts_text(g.from), counts_text(g.net));
      if (!pair.price.empty()) text += fmt::format(" | price: {}", counts_text(g.price));
      text += '\n';
    }

    for (std::size_t i = 0; i < firms.size(); ++i) {
      const auto j = static_cast<Eigen::Index>(i);
      const auto node = snaps[k].nodes.find(firms[i]);
      const bool known = node != snaps[k].nodes.end();
      std::vector<std::string> row{
          format_date(pair.from_date), format_date(pair.to_date), firms[i],
          known ? node->second.region : "",
          known ? (node->second.state_owned ? "state_owned" : "private") : "",
          pair.periphery[i] ? "periphery" : "core",
          csv::format_double(pair.before.to_others(j)), csv::format_double(pair.after.to_others(j)),
          csv::format_double(pair.diff.deltas[i].to),
          csv::format_double(pair.before.from_others(j)), csv::format_double(pair.after.from_others(j)),
          csv::format_double(pair.diff.deltas[i].from),
          csv::format_double(pair.before.net(j)), csv::format_double(pair.after.net(j)),
          csv::format_double(pair.diff.deltas[i].net)};
      if (!pair.price.empty()) row.emplace_back(to_string(pair.price[i]));
      report.csv += csv::join(row) + '\n';
    }
    report.pairs.push_back(std::move(pair));
  }
  for (const auto& m : report.price_mismatches) text += "price join: " + m + '\n';
  return report;
}

}  // namespace volnet::cli
