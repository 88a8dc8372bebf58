#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "volnet/csv.hpp"
#include "volnet/errors.hpp"
#include "volnet/fevd.hpp"

namespace volnet::fevd {

ConnectednessTable build_table(const Eigen::MatrixXd& d, std::vector<std::string> firms,
                               std::size_t horizon) {
  const Eigen::Index n = d.rows();
  if (d.cols() != n) throw ValidationError("decomposition matrix must be square");
  if (static_cast<Eigen::Index>(firms.size()) != n) {
    throw ValidationError(fmt::format("{} firm names for a {}x{} table", firms.size(), n, n));
  }
  ConnectednessTable table;
  table.firms = std::move(firms);
  table.d = d;
  table.horizon = horizon;
  table.from_others.resize(n);
  table.to_others.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double from = 0.0;
    double to = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k == j) continue;
      from += d(j, k);
      to += d(k, j);
    }
    table.from_others(j) = from;
    table.to_others(j) = to;
  }
  table.net = table.to_others - table.from_others;
  table.net_pairwise.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    table.net_pairwise(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = d(j, i) - d(i, j);
      table.net_pairwise(i, j) = v;
      table.net_pairwise(j, i) = -v;
    }
  }
  double off_diagonal = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j) off_diagonal += d(i, j);
    }
  }
  table.total = n > 0 ? off_diagonal / static_cast<double>(n) : 0.0;
  return table;
}

ConnectednessTable connectedness(const varnet::VarModel& model, std::vector<std::string> firms,
                                 std::size_t horizon) {
  const auto irf = impulse_responses(model, horizon);
  Eigen::MatrixXd theta;
  try {
    theta = gfevd(irf, model.sigma);
  } catch (const DegenerateFirmError& e) {
    const auto k = e.firm_index();
    const std::string name = k < firms.size() ? firms[k] : fmt::format("#{}", k);
    throw DegenerateFirmError(k, fmt::format("degenerate firm '{}': {}", name, e.what()));
  }
  return build_table(normalize_rows(theta), std::move(firms), horizon);
}

std::string_view to_string(Measure measure) {
  switch (measure) {
    case Measure::kTo: return "to";
    case Measure::kFrom: return "from";
    case Measure::kNet: return "net";
  }
  return "?";
}

double FirmDelta::get(Measure m) const {
  switch (m) {
    case Measure::kTo: return to;
    case Measure::kFrom: return from;
    case Measure::kNet: return net;
  }
  return 0.0;
}

const DirectionCounts& TableDiff::counts(Measure m) const {
  switch (m) {
    case Measure::kTo: return to;
    case Measure::kFrom: return from;
    case Measure::kNet: return net;
  }
  return to;
}

std::vector<FirmDelta> TableDiff::top_movers(Measure m, std::size_t k) const {
  std::vector<std::size_t> order(deltas.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(deltas[a].get(m)) > std::abs(deltas[b].get(m));
  });
  std::vector<FirmDelta> out;
  for (std::size_t i = 0; i < std::min(k, order.size()); ++i) out.push_back(deltas[order[i]]);
  return out;
}

TableDiff table_diff(const ConnectednessTable& a, const ConnectednessTable& b) {
  if (a.firms != b.firms) throw ValidationError("cannot diff tables with different firm orders");
  TableDiff diff;
  auto tally = [](DirectionCounts& c, double delta) {
    if (delta > 0.0) ++c.up;
    if (delta < 0.0) ++c.down;
  };
  for (std::size_t j = 0; j < a.firms.size(); ++j) {
    const auto k = static_cast<Eigen::Index>(j);
    FirmDelta fd{a.firms[j], b.to_others(k) - a.to_others(k), b.from_others(k) - a.from_others(k),
                 b.net(k) - a.net(k)};
    tally(diff.to, fd.to);
    tally(diff.from, fd.from);
    tally(diff.net, fd.net);
    diff.deltas.push_back(std::move(fd));
  }
  diff.total_delta = b.total - a.total;
  return diff;
}

std::string format_table_csv(const ConnectednessTable& table) {
  const auto n = static_cast<Eigen::Index>(table.size());
  std::vector<std::string> header{""};
  header.insert(header.end(), table.firms.begin(), table.firms.end());
  header.emplace_back("from_others");
  std::string out = csv::join(header) + '\n';
  for (Eigen::Index i = 0; i < n; ++i) {
    out += csv::escape(table.firms[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < n; ++j) out += ',' + csv::format_double(table.d(i, j));
    out += ',' + csv::format_double(table.from_others(i)) + '\n';
  }
  out += "to_others";
  for (Eigen::Index j = 0; j < n; ++j) out += ',' + csv::format_double(table.to_others(j));
  out += ',' + csv::format_double(table.total) + '\n';
  return out;
}

ConnectednessTable parse_table_csv(std::string_view text, std::size_t horizon) {
  const auto doc = csv::parse(text);
  if (doc.header.size() < 2 || doc.header.back() != "from_others") {
    throw CorruptDataError("table CSV: header must end with 'from_others'");
  }
  std::vector<std::string> firms(doc.header.begin() + 1, doc.header.end() - 1);
  const auto n = static_cast<Eigen::Index>(firms.size());
  if (static_cast<Eigen::Index>(doc.rows.size()) != n + 1) {
    throw CorruptDataError(fmt::format("table CSV: expected {} rows, got {}", n + 1, doc.rows.size()));
  }
  auto number = [](const std::string& s) {
    auto v = csv::parse_double(s);
    if (!v) throw CorruptDataError(fmt::format("table CSV: bad number '{}'", s));
    return *v;
  };
  Eigen::MatrixXd d(n, n);
  Eigen::VectorXd from(n), to(n);
  for (Eigen::Index i = 0; i <= n; ++i) {
    const auto& f = doc.rows[static_cast<std::size_t>(i)].fields;
    if (static_cast<Eigen::Index>(f.size()) != n + 2) throw CorruptDataError("table CSV: ragged row");
    if (i < n && f[0] != firms[static_cast<std::size_t>(i)]) {
      throw CorruptDataError(fmt::format("table CSV: row {} labelled '{}'", i, f[0]));
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = number(f[static_cast<std::size_t>(j) + 1]);
      if (i < n) d(i, j) = v;
      else to(j) = v;
    }
    if (i < n) from(i) = number(f.back());
  }
  const double total = number(doc.rows.back().fields.back());
  auto table = build_table(d, std::move(firms), horizon);
  if (table.from_others != from || table.to_others != to || table.total != total) {
    throw CorruptDataError("table CSV: stored aggregates disagree with the matrix");
  }
  return table;
}

}  // namespace volnet::fevd
