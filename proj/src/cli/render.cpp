#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "volnet/csv.hpp"
#include "volnet/errors.hpp"
#include "volnet/cli.hpp"

namespace volnet::cli {

namespace {

constexpr const char* kCategorical[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                        "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

const std::map<std::string, std::string>& region_palette() {
  static const std::map<std::string, std::string> palette{
      {"north", "#1f77b4"},     {"south", "#ff7f0e"},     {"east", "#2ca02c"},
      {"northeast", "#d62728"}, {"northwest", "#9467bd"}, {"southwest", "#8c564b"},
      {"unknown", "#7f7f7f"}};
  return palette;
}

const std::map<std::string, std::string>& ownership_palette() {
  static const std::map<std::string, std::string> palette{
      {"state_owned", "#d62728"}, {"private", "#1f77b4"}, {"unknown", "#7f7f7f"}};
  return palette;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string dot_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

std::string_view measure_name(SizeBy s) {
  switch (s) {
    case SizeBy::kTo: return "to";
    case SizeBy::kFrom: return "from";
    case SizeBy::kNet: return "net";
    case SizeBy::kUniform: return "uniform";
  }
  return "?";
}

std::string_view color_name(ColorBy c) {
  switch (c) {
    case ColorBy::kRegion: return "region";
    case ColorBy::kStateOwned: return "state_owned";
    case ColorBy::kCustom: return "custom";
  }
  return "?";
}

Eigen::VectorXd measure_values(const fevd::ConnectednessTable& table, SizeBy size_by) {
  switch (size_by) {
    case SizeBy::kTo: return table.to_others;
    case SizeBy::kFrom: return table.from_others;
    case SizeBy::kNet: return table.net;
    case SizeBy::kUniform: break;
  }
  return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(table.size()));
}

double measure_floor(const fevd::ConnectednessTable& table, SizeBy size_by) {
  if (size_by != SizeBy::kNet || table.size() == 0) return 0.0;
  return table.net.minCoeff();
}

// Palette actually used: the user's, checked for coverage, or the built-in one.
std::map<std::string, std::string> resolve_palette(const std::vector<std::string>& categories,
                                                   const RenderSpec& spec) {
  const std::set<std::string> present(categories.begin(), categories.end());
  std::map<std::string, std::string> palette = spec.palette;
  if (palette.empty()) {
    if (spec.color_by == ColorBy::kRegion) palette = region_palette();
    else if (spec.color_by == ColorBy::kStateOwned) palette = ownership_palette();
    else {
      std::size_t k = 0;
      for (const auto& c : present) palette[c] = kCategorical[k++ % std::size(kCategorical)];
    }
  }
  for (const auto& c : present) {
    if (!palette.contains(c)) throw ValidationError(fmt::format("palette has no color for category '{}'", c));
  }
  return palette;
}

}  // namespace

std::vector<std::string> node_categories(const rolling::NetworkSnapshot& snapshot, const RenderSpec& spec) {
  std::vector<std::string> out;
  for (const auto& firm : snapshot.table.firms) {
    if (spec.color_by == ColorBy::kCustom) {
      auto it = spec.custom_categories.find(firm);
      if (it == spec.custom_categories.end()) {
        throw ValidationError(fmt::format("no custom category for firm '{}'", firm));
      }
      out.push_back(it->second);
      continue;
    }
    auto it = snapshot.nodes.find(firm);
    if (it == snapshot.nodes.end()) {
      out.emplace_back("unknown");
    } else if (spec.color_by == ColorBy::kRegion) {
      out.push_back(it->second.region);
    } else {
      out.emplace_back(it->second.state_owned ? "state_owned" : "private");
    }
  }
  return out;
}

std::vector<double> node_radii(const fevd::ConnectednessTable& table, const RenderSpec& spec) {
  const auto values = measure_values(table, spec.size_by);
  const double floor = measure_floor(table, spec.size_by);
  std::vector<double> radii;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    radii.push_back(kMinRadius + spec.size_scale * (values(i) - floor));
  }
  return radii;
}

std::string render_svg(const rolling::NetworkSnapshot& snapshot, const RenderSpec& spec) {
  if (!(spec.size_scale > 0.0)) throw ValidationError("size_scale must be positive");
  const auto& pos = snapshot.layout;
  const auto categories = node_categories(snapshot, spec);
  const auto palette = resolve_palette(categories, spec);
  const auto radii = node_radii(snapshot.table, spec);

  double min_x = 0.0, max_x = 0.0, min_y = 0.0, max_y = 0.0;
  if (!pos.empty()) {
    min_x = max_x = pos[0].x;
    min_y = max_y = pos[0].y;
    for (const auto& p : pos) {
      min_x = std::min(min_x, p.x);
      max_x = std::max(max_x, p.x);
      min_y = std::min(min_y, p.y);
      max_y = std::max(max_y, p.y);
    }
  }
  // The frame depends on positions only, so sizing changes never move nodes.
  const double margin = 25.0 + 0.05 * std::max(max_x - min_x, max_y - min_y);
  const double width = max_x - min_x + 2 * margin;
  const double height = max_y - min_y + 2 * margin;
  auto sx = [&](double x) { return x - min_x + margin; };
  auto sy = [&](double y) { return max_y - y + margin; };

  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += fmt::format(
      "<!-- volnet network {}: radius = {} + {} * ({} - {}); fill by {} -->\n",
      format_date(snapshot.date), csv::format_double(kMinRadius), csv::format_double(spec.size_scale),
      measure_name(spec.size_by), csv::format_double(measure_floor(snapshot.table, spec.size_by)),
      color_name(spec.color_by));
  out += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.3f}\" height=\"{:.3f}\" "
      "viewBox=\"0 0 {:.3f} {:.3f}\">\n",
      width, height, width, height);
  out += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n<g id=\"nodes\">\n";
  for (std::size_t i = 0; i < pos.size(); ++i) {
    const auto& firm = snapshot.table.firms[i];
    out += fmt::format(
        "<circle id=\"node-{0}\" cx=\"{1:.3f}\" cy=\"{2:.3f}\" r=\"{3:.3f}\" fill=\"{4}\" "
        "stroke=\"#333333\" stroke-width=\"0.5\"><title>{0}</title></circle>\n",
        xml_escape(firm), sx(pos[i].x), sy(pos[i].y), radii[i], palette.at(categories[i]));
  }
  out += "</g>\n";
  if (spec.label_nodes) {
    out += "<g id=\"labels\" font-family=\"sans-serif\" font-size=\"8\" text-anchor=\"middle\">\n";
    for (std::size_t i = 0; i < pos.size(); ++i) {
      out += fmt::format("<text x=\"{:.3f}\" y=\"{:.3f}\">{}</text>\n", sx(pos[i].x),
                         sy(pos[i].y) + 3.0, xml_escape(snapshot.table.firms[i]));
    }
    out += "</g>\n";
  }
  out += "</svg>\n";
  return out;
}

std::string render_dot(const rolling::NetworkSnapshot& snapshot, const RenderSpec& spec) {
  const auto categories = node_categories(snapshot, spec);
  const auto palette = resolve_palette(categories, spec);
  const auto radii = node_radii(snapshot.table, spec);
  const auto& table = snapshot.table;

  std::string out = fmt::format("digraph \"{}\" {{\n", format_date(snapshot.date));
  out += "  graph [layout=neato, overlap=true, splines=false];\n";
  out += "  node [shape=circle, style=filled, fixedsize=true];\n";
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    out += fmt::format(
        "  \"{}\" [pos=\"{},{}!\", width={}, fillcolor=\"{}\", category=\"{}\", to={}, from={}, net={}];\n",
        dot_escape(table.firms[i]), csv::format_double(snapshot.layout[i].x),
        csv::format_double(snapshot.layout[i].y), csv::format_double(2.0 * radii[i] / 72.0),
        palette.at(categories[i]), dot_escape(categories[i]), csv::format_double(table.to_others(k)),
        csv::format_double(table.from_others(k)), csv::format_double(table.net(k)));
  }
  // Edge j -> i carries d(i, j): the share of i's forecast variance due to j.
  for (std::size_t i = 0; i < table.size(); ++i) {
    for (std::size_t j = 0; j < table.size(); ++j) {
      if (i == j) continue;
      out += fmt::format("  \"{}\" -> \"{}\" [weight={}];\n", dot_escape(table.firms[j]),
                         dot_escape(table.firms[i]),
                         csv::format_double(table.d(static_cast<Eigen::Index>(i),
                                                    static_cast<Eigen::Index>(j)) / 100.0));
    }
  }
  out += "}\n";
  return out;
}

}  // namespace volnet::cli
