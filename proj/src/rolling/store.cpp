#include <algorithm>

#include <fmt/format.h>
#include <json.hpp>

#include "volnet/csv.hpp"
#include "volnet/digest.hpp"
#include "volnet/errors.hpp"
#include "volnet/rolling.hpp"

namespace volnet::rolling {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kTableFile = "table.csv";
constexpr const char* kLayoutFile = "layout.json";
constexpr const char* kModelFile = "model.json";
constexpr const char* kMetaFile = "meta.json";

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

std::string format_model_json(const ModelSummary& model, const std::vector<std::string>& firms) {
  json j;
  j["format_version"] = kSnapshotFormatVersion;
  j["lags"] = model.lags;
  j["alpha"] = model.alpha;
  json equations = json::array();
  for (std::size_t i = 0; i < model.equations.size(); ++i) {
    const auto& eq = model.equations[i];
    equations.push_back({{"firm", firms.at(i)},
                         {"lambda", eq.lambda},
                         {"converged", eq.converged},
                         {"nonzero_per_lag", eq.nonzero_per_lag}});
  }
  j["equations"] = std::move(equations);
  return j.dump(2) + "\n";
}

ModelSummary parse_model_json(const std::string& text) {
  const auto j = json::parse(text);
  ModelSummary model;
  model.lags = j.at("lags").get<std::size_t>();
  model.alpha = j.at("alpha").get<double>();
  for (const auto& eq : j.at("equations")) {
    varnet::EquationSummary s;
    s.lambda = eq.at("lambda").get<double>();
    s.converged = eq.at("converged").get<bool>();
    s.nonzero_per_lag = eq.at("nonzero_per_lag").get<std::vector<std::size_t>>();
    model.equations.push_back(std::move(s));
  }
  return model;
}

std::string format_meta_json(const NetworkSnapshot& s, const json& checksums) {
  const auto& p = s.provenance;
  json j;
  j["format_version"] = kSnapshotFormatVersion;
  j["date"] = format_date(s.date);
  j["config_hash"] = p.config_hash;
  j["horizon"] = s.table.horizon;
  j["window"] = {{"start", format_date(p.window_start)},
                 {"end", format_date(p.window_end)},
                 {"digest", p.window_digest}};
  j["degraded"] = p.degraded;
  j["failure"] = p.failure.empty() ? json(nullptr) : json(p.failure);
  j["layout"] = {{"source", p.layout_source},
                 {"seed", optional_json(p.layout_seed)},
                 {"previous_date", p.previous_date ? json(format_date(*p.previous_date)) : json(nullptr)},
                 {"initial_digest", p.initial_layout_digest},
                 {"final_digest", p.final_layout_digest},
                 {"converged_at", optional_json(p.layout_converged_at)}};
  json nodes = json::object();
  for (const auto& [ticker, attrs] : s.nodes) {
    nodes[ticker] = {{"region", attrs.region},
                     {"state_owned", attrs.state_owned},
                     {"parent_ticker", optional_json(attrs.parent_ticker)}};
  }
  j["nodes"] = std::move(nodes);
  j["checksums"] = checksums;
  return j.dump(2) + "\n";
}

fs::path snapshot_dir(const Date& date, const fs::path& root) { return root / format_date(date); }

}  // namespace

void store_snapshot(const NetworkSnapshot& snapshot, const fs::path& root) {
  if (snapshot.layout.size() != snapshot.table.size()) {
    throw ValidationError("snapshot layout and table cover different firm sets");
  }
  const auto dir = snapshot_dir(snapshot.date, root);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
  // A stale meta.json must not vouch for files that are about to change.
  fs::remove(dir / kMetaFile, ec);

  const std::string date = format_date(snapshot.date);
  const std::string table = fevd::format_table_csv(snapshot.table);
  const std::string layout_json = layout::format_layout_json(date, snapshot.provenance.layout_seed,
                                                             snapshot.table.firms, snapshot.layout);
  const std::string model = format_model_json(snapshot.model, snapshot.table.firms);
  write_text_file(dir / kTableFile, table);
  write_text_file(dir / kLayoutFile, layout_json);
  write_text_file(dir / kModelFile, model);
  json checksums = {{kTableFile, sha256_hex(table)},
                    {kLayoutFile, sha256_hex(layout_json)},
                    {kModelFile, sha256_hex(model)}};
  write_text_file(dir / kMetaFile, format_meta_json(snapshot, checksums));
}

bool snapshot_exists(const Date& date, const fs::path& root) {
  return fs::exists(snapshot_dir(date, root) / kMetaFile);
}

NetworkSnapshot load_snapshot(const Date& date, const fs::path& root) {
  const auto dir = snapshot_dir(date, root);
  if (!fs::exists(dir / kMetaFile)) {
    throw NotFoundError(fmt::format("no snapshot for {} under '{}'", format_date(date), root.string()));
  }
  NetworkSnapshot s;
  s.date = date;
  try {
    const auto meta = json::parse(read_text_file(dir / kMetaFile));
    if (meta.at("format_version").get<int>() != kSnapshotFormatVersion) {
      throw CorruptDataError(fmt::format("{}: unsupported snapshot format", format_date(date)));
    }
    auto read_checked = [&](const char* name) {
      const auto text = read_text_file(dir / name);
      if (sha256_hex(text) != meta.at("checksums").at(name).get<std::string>()) {
        throw CorruptDataError(fmt::format("{}/{}: checksum mismatch", format_date(date), name));
      }
      return text;
    };
    const auto table_text = read_checked(kTableFile);
    const auto layout_text = read_checked(kLayoutFile);
    const auto model_text = read_checked(kModelFile);

    s.table = fevd::parse_table_csv(table_text, meta.at("horizon").get<std::size_t>());
    auto layout_file = layout::parse_layout_json(layout_text);
    if (layout_file.nodes != s.table.firms) {
      throw CorruptDataError(fmt::format("{}: layout and table firm sets differ", format_date(date)));
    }
    s.layout = std::move(layout_file.positions);
    s.model = parse_model_json(model_text);

    auto& p = s.provenance;
    p.config_hash = meta.at("config_hash").get<std::string>();
    const auto& window = meta.at("window");
    p.window_start = parse_date_or_throw(window.at("start").get<std::string>());
    p.window_end = parse_date_or_throw(window.at("end").get<std::string>());
    p.window_digest = window.at("digest").get<std::string>();
    p.degraded = meta.at("degraded").get<bool>();
    if (!meta.at("failure").is_null()) p.failure = meta.at("failure").get<std::string>();
    const auto& lay = meta.at("layout");
    p.layout_source = lay.at("source").get<std::string>();
    if (!lay.at("seed").is_null()) p.layout_seed = lay.at("seed").get<std::uint64_t>();
    if (!lay.at("previous_date").is_null()) {
      p.previous_date = parse_date_or_throw(lay.at("previous_date").get<std::string>());
    }
    p.initial_layout_digest = lay.at("initial_digest").get<std::string>();
    p.final_layout_digest = lay.at("final_digest").get<std::string>();
    if (!lay.at("converged_at").is_null()) p.layout_converged_at = lay.at("converged_at").get<std::size_t>();
    for (const auto& [ticker, attrs] : meta.at("nodes").items()) {
      NodeAttributes a;
      a.region = attrs.at("region").get<std::string>();
      a.state_owned = attrs.at("state_owned").get<bool>();
      if (!attrs.at("parent_ticker").is_null()) a.parent_ticker = attrs.at("parent_ticker").get<std::string>();
      s.nodes.emplace(ticker, std::move(a));
    }
  } catch (const nlohmann::json::exception& e) {
    throw CorruptDataError(fmt::format("{}: malformed snapshot metadata: {}", format_date(date), e.what()));
  } catch (const ValidationError& e) {
    throw CorruptDataError(fmt::format("{}: {}", format_date(date), e.what()));
  }
  return s;
}

std::vector<Date> list_snapshot_dates(const fs::path& root) {
  std::vector<Date> dates;
  if (!fs::is_directory(root)) return dates;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    auto date = parse_date(entry.path().filename().string());
    if (date && fs::exists(entry.path() / kMetaFile)) dates.push_back(*date);
  }
  std::sort(dates.begin(), dates.end());
  return dates;
}

void remove_snapshot(const Date& date, const fs::path& root) {
  std::error_code ec;
  fs::remove_all(snapshot_dir(date, root), ec);
  if (ec) throw IoError(fmt::format("cannot remove snapshot {}: {}", format_date(date), ec.message()));
}

}  // namespace volnet::rolling
