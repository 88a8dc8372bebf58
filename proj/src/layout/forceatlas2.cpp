#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>
#include <json.hpp>

#include "volnet/csv.hpp"
#include "volnet/errors.hpp"
#include "volnet/layout.hpp"

namespace volnet::layout {

namespace {

struct Separation {
  Vec2 unit;  // from the first point towards the second
  double distance = 0.0;
};

Separation separate(const Vec2& p1, const Vec2& p2, bool first_is_lower) {
  const Vec2 diff = p2 - p1;
  const double d = diff.norm();
  if (d < kMinDistance) {
    return {Vec2{first_is_lower ? 1.0 : -1.0, 0.0}, kMinDistance};
  }
  return {(1.0 / d) * diff, d};
}

}  // namespace

LayoutGraph edges_from_table(const fevd::ConnectednessTable& table, DegreeConvention convention) {
  const std::size_t n = table.size();
  LayoutGraph graph;
  graph.nodes = table.firms;
  const double degree = convention == DegreeConvention::kNodeCount
                            ? static_cast<double>(n)
                            : static_cast<double>(n > 0 ? n - 1 : 0);
  graph.degrees.assign(n, degree);
  graph.edges.reserve(n * (n > 0 ? n - 1 : 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double w = table.d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) / 100.0;
      graph.edges.push_back(Edge{j, i, std::max(w, 0.0)});
    }
  }
  return graph;
}

void validate(const LayoutParams& p) {
  if (!(p.repulsion_scale > 0.0)) throw ValidationError("layout repulsion scale S must be > 0");
  if (p.edge_weight_influence != 0.0 && p.edge_weight_influence != 1.0) {
    throw ValidationError("edge weight influence must be 0 or 1");
  }
  if (!(p.swing_tolerance > 0.0)) throw ValidationError("swing tolerance must be > 0");
  if (!(p.speed_constant > 0.0)) throw ValidationError("speed constant must be > 0");
  if (p.iterations < 1) throw ValidationError("layout iterations must be >= 1");
  if (!(p.max_global_speed > 0.0)) throw ValidationError("max global speed must be > 0");
}

Vec2 attraction_force(double weight, const Vec2& p1, const Vec2& p2, double delta,
                      bool first_is_lower) {
  const auto sep = separate(p1, p2, first_is_lower);
  const double w = delta == 0.0 ? 1.0 : std::pow(weight, delta);
  return (w * sep.distance) * sep.unit;
}

double repulsion_numerator(double degree1, double degree2, double scale) {
  return scale * (degree1 + 1.0) * (degree2 + 1.0);
}

Vec2 repulsion_force(double degree1, double degree2, const Vec2& p1, const Vec2& p2, double scale,
                     bool first_is_lower) {
  const auto sep = separate(p1, p2, first_is_lower);
  return -(repulsion_numerator(degree1, degree2, scale) / sep.distance) * sep.unit;
}

ForceState::ForceState(std::size_t nodes, double tau)
    : current_force(nodes),
      previous_force(nodes),
      swinging(nodes, 0.0),
      traction(nodes, 0.0),
      speed(nodes, 0.0),
      tolerance(tau) {}

std::vector<Vec2> net_forces(const LayoutGraph& graph, const Positions& positions,
                             const LayoutParams& params) {
  const std::size_t n = graph.size();
  if (positions.size() != n) throw ValidationError("positions do not match the graph size");
  std::vector<Vec2> force(n);
  for (const auto& e : graph.edges) {
    if (e.source == e.target) continue;
    const Vec2 f = attraction_force(e.weight, positions[e.source], positions[e.target],
                                    params.edge_weight_influence, e.source < e.target);
    force[e.source] += f;
    force[e.target] -= f;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const Vec2 f = repulsion_force(graph.degrees[i], graph.degrees[j], positions[i], positions[j],
                                     params.repulsion_scale);
      force[i] += f;
      force[j] -= f;
    }
  }
  return force;
}

IterationRecord iterate(const LayoutGraph& graph, Positions& positions, ForceState& state,
                        const LayoutParams& params, std::size_t iteration) {
  const std::size_t n = graph.size();
  if (state.previous_force.size() != n) state = ForceState(n, params.swing_tolerance);
  state.current_force = net_forces(graph, positions, params);

  const double previous_global_swinging = state.global_swinging;
  double swg = 0.0;
  double tra = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& now = state.current_force[i];
    const Vec2& before = state.previous_force[i];
    state.swinging[i] = (now - before).norm();
    state.traction[i] = 0.5 * (now + before).norm();
    swg += (graph.degrees[i] + 1.0) * state.swinging[i];
    tra += (graph.degrees[i] + 1.0) * state.traction[i];
  }
  if (params.adaptive_tolerance && previous_global_swinging > 0.0 &&
      swg > 10.0 * previous_global_swinging) {
    state.tolerance *= 0.5;
  }
  state.global_swinging = swg;
  state.global_traction = tra;
  state.global_speed = swg > 0.0 ? state.tolerance * tra / swg : params.max_global_speed;

  const double ks = params.effective_speed_constant();
  const double sg = state.global_speed;
  IterationRecord record;
  record.iteration = iteration;
  record.global_speed = sg;
  record.global_swinging = swg;
  record.global_traction = tra;
  record.tolerance = state.tolerance;
  for (std::size_t i = 0; i < n; ++i) {
    state.speed[i] = ks * sg / (1.0 + sg * std::sqrt(state.swinging[i]));
    const Vec2 displacement = state.speed[i] * state.current_force[i];
    positions[i] += displacement;
    record.max_displacement = std::max(record.max_displacement, displacement.norm());
  }
  state.previous_force = state.current_force;
  return record;
}

Positions random_positions(std::size_t count, std::uint64_t seed, double extent) {
  std::mt19937_64 rng(seed);
  auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  Positions out(count);
  for (auto& p : out) {
    p.x = extent * unit();
    p.y = extent * unit();
  }
  return out;
}

LayoutResult run_layout(const LayoutGraph& graph, const LayoutParams& params,
                        const std::optional<Positions>& initial, std::uint64_t seed) {
  validate(params);
  LayoutResult result;
  if (initial) {
    if (initial->size() != graph.size()) {
      throw ValidationError(fmt::format("initial layout has {} positions for {} nodes",
                                        initial->size(), graph.size()));
    }
    result.initial = *initial;
  } else {
    result.initial = random_positions(graph.size(), seed);
    result.seed = seed;
  }
  result.positions = result.initial;
  ForceState state(graph.size(), params.swing_tolerance);
  result.trace.reserve(params.iterations);
  for (std::size_t r = 1; r <= params.iterations; ++r) {
    auto record = iterate(graph, result.positions, state, params, r);
    if (!result.converged_at && record.max_displacement < params.convergence_tolerance) {
      result.converged_at = r;
    }
    result.trace.push_back(record);
  }
  return result;
}

std::string format_layout_json(const std::string& date, std::optional<std::uint64_t> seed,
                               const std::vector<std::string>& nodes, const Positions& positions) {
  nlohmann::ordered_json j;
  j["date"] = date;
  j["seed"] = seed ? nlohmann::ordered_json(*seed) : nlohmann::ordered_json(nullptr);
  nlohmann::ordered_json pos = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < nodes.size(); ++i) pos[nodes[i]] = {positions[i].x, positions[i].y};
  j["positions"] = std::move(pos);
  return j.dump(2) + "\n";
}

LayoutFile parse_layout_json(std::string_view text) {
  LayoutFile out;
  try {
    const auto j = nlohmann::ordered_json::parse(text);
    out.date = j.at("date").get<std::string>();
    if (!j.at("seed").is_null()) out.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& [ticker, xy] : j.at("positions").items()) {
      if (!xy.is_array() || xy.size() != 2) throw CorruptDataError("layout position must be [x, y]");
      out.nodes.push_back(ticker);
      out.positions.push_back(Vec2{xy[0].get<double>(), xy[1].get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw CorruptDataError(fmt::format("layout JSON: {}", e.what()));
  }
  return out;
}

std::string format_trace_csv(const std::vector<IterationRecord>& trace) {
  std::string out = "iteration,global_speed,global_swinging,global_traction,max_displacement\n";
  for (const auto& r : trace) {
    out += fmt::format("{},{},{},{},{}\n", r.iteration, csv::format_double(r.global_speed),
                       csv::format_double(r.global_swinging), csv::format_double(r.global_traction),
                       csv::format_double(r.max_displacement));
  }
  return out;
}

}  // namespace volnet::layout
