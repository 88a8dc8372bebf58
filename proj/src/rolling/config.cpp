#include <charconv>
#include <set>

#include <fmt/format.h>

#include "volnet/csv.hpp"
#include "volnet/digest.hpp"
#include "volnet/errors.hpp"
#include "volnet/rolling.hpp"

namespace volnet::rolling {

layout::LayoutParams RollingConfig::layout_params() const {
  layout::LayoutParams p;
  p.repulsion_scale = repulsion_scale;
  p.edge_weight_influence = edge_weight_influence;
  p.swing_tolerance = swing_tolerance;
  p.adaptive_tolerance = adaptive_tolerance;
  p.speed_constant = speed_constant;
  p.prevent_overlap = prevent_overlap;
  p.iterations = layout_iterations;
  return p;
}

varnet::VarFitOptions RollingConfig::fit_options() const {
  varnet::VarFitOptions o;
  o.alpha = alpha;
  o.folds = folds;
  o.grid_size = grid_size;
  o.grid_ratio = grid_ratio;
  return o;
}

std::vector<std::string> validation_errors(const RollingConfig& cfg) {
  std::vector<std::string> errors;
  if (cfg.lags < 1) errors.push_back("lags must be >= 1");
  if (cfg.window_length <= cfg.lags) {
    errors.push_back(fmt::format("window_length ({}) must exceed lags ({})", cfg.window_length, cfg.lags));
  }
  if (cfg.horizon < 1) errors.push_back("horizon must be >= 1");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
    errors.push_back(fmt::format("alpha must be in the open interval (0, 1), got {}", cfg.alpha));
  }
  if (cfg.folds < 2) errors.push_back("folds must be >= 2");
  if (cfg.window_length > cfg.lags && cfg.folds > cfg.window_length - cfg.lags) {
    errors.push_back(fmt::format("folds ({}) exceed the {} usable rows per window", cfg.folds,
                                 cfg.window_length - cfg.lags));
  }
  if (cfg.layout_iterations < 1) errors.push_back("layout_iterations must be >= 1");
  if (cfg.grid_size < 1) errors.push_back("grid_size must be >= 1");
  if (!(cfg.grid_ratio > 0.0 && cfg.grid_ratio < 1.0)) errors.push_back("grid_ratio must be in (0, 1)");
  if (!(cfg.repulsion_scale > 0.0)) errors.push_back("repulsion_scale must be > 0");
  if (cfg.edge_weight_influence != 0.0 && cfg.edge_weight_influence != 1.0) {
    errors.push_back("edge_weight_influence must be 0 or 1");
  }
  if (!(cfg.swing_tolerance > 0.0)) errors.push_back("swing_tolerance must be > 0");
  if (!(cfg.speed_constant > 0.0)) errors.push_back("speed_constant must be > 0");
  return errors;
}

void validate(const RollingConfig& cfg) {
  const auto errors = validation_errors(cfg);
  if (errors.empty()) return;
  std::string message = "invalid configuration:";
  for (const auto& e : errors) message += "\n  - " + e;
  throw ValidationError(message);
}

namespace {

template <typename T>
bool parse_integer(const std::string& text, T& out) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

bool parse_flag(const std::string& text, bool& out) {
  if (text == "true" || text == "1") return out = true, true;
  if (text == "false" || text == "0") return out = false, true;
  return false;
}

std::string_view convention_name(layout::DegreeConvention c) {
  return c == layout::DegreeConvention::kNodeCount ? "node_count" : "pairwise";
}

}  // namespace

RollingConfig parse_config(std::string_view text, RollingConfig cfg) {
  std::vector<std::string> errors;
  std::set<std::string> seen;
  bool have_version = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string line = csv::trim(text.substr(pos, end - pos));
    pos = end + 1;
    if (auto hash = line.find('#'); hash != std::string::npos) line = csv::trim(line.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back(fmt::format("line {}: expected 'key = value'", line_no));
      continue;
    }
    const std::string key = csv::trim(line.substr(0, eq));
    const std::string value = csv::trim(line.substr(eq + 1));
    if (!seen.insert(key).second) {
      errors.push_back(fmt::format("line {}: duplicate key '{}'", line_no, key));
      continue;
    }
    bool ok = true;
    auto as_double = [&](double& out) {
      auto v = csv::parse_double(value);
      if (v) out = *v;
      return v.has_value();
    };
    if (key == "schema_version") {
      int version = 0;
      ok = parse_integer(value, version);
      if (ok && version != kConfigSchemaVersion) {
        errors.push_back(fmt::format("line {}: unsupported schema_version {} (expected {})", line_no,
                                     version, kConfigSchemaVersion));
      }
      have_version = true;
    } else if (key == "window_length") ok = parse_integer(value, cfg.window_length);
    else if (key == "lags") ok = parse_integer(value, cfg.lags);
    else if (key == "horizon") ok = parse_integer(value, cfg.horizon);
    else if (key == "alpha") ok = as_double(cfg.alpha);
    else if (key == "folds") ok = parse_integer(value, cfg.folds);
    else if (key == "layout_iterations") ok = parse_integer(value, cfg.layout_iterations);
    else if (key == "seed") ok = parse_integer(value, cfg.seed);
    else if (key == "grid_size") ok = parse_integer(value, cfg.grid_size);
    else if (key == "grid_ratio") ok = as_double(cfg.grid_ratio);
    else if (key == "repulsion_scale") ok = as_double(cfg.repulsion_scale);
    else if (key == "edge_weight_influence") ok = as_double(cfg.edge_weight_influence);
    else if (key == "swing_tolerance") ok = as_double(cfg.swing_tolerance);
    else if (key == "adaptive_tolerance") ok = parse_flag(value, cfg.adaptive_tolerance);
    else if (key == "speed_constant") ok = as_double(cfg.speed_constant);
    else if (key == "prevent_overlap") ok = parse_flag(value, cfg.prevent_overlap);
    else if (key == "threads") ok = parse_integer(value, cfg.threads);
    else if (key == "degree_convention") {
      if (value == "node_count") cfg.degree_convention = layout::DegreeConvention::kNodeCount;
      else if (value == "pairwise") cfg.degree_convention = layout::DegreeConvention::kPairwise;
      else ok = false;
    } else {
      errors.push_back(fmt::format("line {}: unknown key '{}'", line_no, key));
      continue;
    }
    if (!ok) errors.push_back(fmt::format("line {}: invalid value '{}' for '{}'", line_no, value, key));
  }
  if (!have_version) errors.push_back("missing schema_version");
  for (auto& e : validation_errors(cfg)) errors.push_back(std::move(e));
  if (!errors.empty()) {
    std::string message = "invalid configuration:";
    for (const auto& e : errors) message += "\n  - " + e;
    throw ValidationError(message);
  }
  return cfg;
}

RollingConfig load_config(const std::filesystem::path& path, RollingConfig base) {
  return parse_config(read_text_file(path), std::move(base));
}

std::string format_config(const RollingConfig& cfg) {
  std::string out;
  auto line = [&out](std::string_view key, const auto& value) {
    out += fmt::format("{} = {}\n", key, value);
  };
  line("schema_version", kConfigSchemaVersion);
  line("window_length", cfg.window_length);
  line("lags", cfg.lags);
  line("horizon", cfg.horizon);
  line("alpha", csv::format_double(cfg.alpha));
  line("folds", cfg.folds);
  line("layout_iterations", cfg.layout_iterations);
  line("seed", cfg.seed);
  line("grid_size", cfg.grid_size);
  line("grid_ratio", csv::format_double(cfg.grid_ratio));
  line("repulsion_scale", csv::format_double(cfg.repulsion_scale));
  line("edge_weight_influence", csv::format_double(cfg.edge_weight_influence));
  line("swing_tolerance", csv::format_double(cfg.swing_tolerance));
  line("adaptive_tolerance", cfg.adaptive_tolerance ? "true" : "false");
  line("speed_constant", csv::format_double(cfg.speed_constant));
  line("prevent_overlap", cfg.prevent_overlap ? "true" : "false");
  line("degree_convention", convention_name(cfg.degree_convention));
  return out;
}

std::string config_hash(const RollingConfig& cfg) { return sha256_hex(format_config(cfg)); }

std::vector<WindowRange> enumerate_windows(std::size_t num_dates, const RollingConfig& cfg) {
  if (cfg.window_length == 0) throw ValidationError("window_length must be positive");
  if (num_dates < cfg.window_length) {
    throw ValidationError(fmt::format("panel has {} dates, shorter than the {}-day window", num_dates,
                                      cfg.window_length));
  }
  std::vector<WindowRange> windows;
  windows.reserve(num_dates - cfg.window_length + 1);
  for (std::size_t end = cfg.window_length - 1; end < num_dates; ++end) {
    windows.push_back({end + 1 - cfg.window_length, end});
  }
  return windows;
}

}  // namespace volnet::rolling
