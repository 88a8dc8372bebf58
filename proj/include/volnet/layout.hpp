#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "volnet/fevd.hpp"

namespace volnet::layout {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
  friend Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
  friend Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
  friend Vec2 operator*(double s, const Vec2& v) { return {s * v.x, s * v.y}; }
  friend Vec2 operator-(const Vec2& v) { return {-v.x, -v.y}; }
  bool operator==(const Vec2&) const = default;
  double norm() const { return std::hypot(x, y); }
};

using Positions = std::vector<Vec2>;

/// Directed edge; weight is the share of the target's forecast variance due
/// to the source (a fraction, not percent).
struct Edge {
  std::size_t source = 0;
  std::size_t target = 0;
  double weight = 0.0;
};

struct LayoutGraph {
  std::vector<std::string> nodes;
  std::vector<double> degrees;
  std::vector<Edge> edges;

  std::size_t size() const { return nodes.size(); }
};

/// Degree assigned to every node of a fully connected table.
enum class DegreeConvention {
  kNodeCount,  // deg = N; S = 10, N = 97 gives S (deg + 1)^2 = 96040
  kPairwise,   // deg = N - 1
};

/// N^2 - N directed edges; the edge from firm j to firm i carries d(i, j) / 100.
LayoutGraph edges_from_table(const fevd::ConnectednessTable& table,
                             DegreeConvention convention = DegreeConvention::kNodeCount);

struct LayoutParams {
  double repulsion_scale = 10.0;       // S
  double edge_weight_influence = 1.0;  // delta, 0 or 1
  double swing_tolerance = 1.0;        // tau
  /// Halve tau whenever global swinging grows more than tenfold in one iteration.
  bool adaptive_tolerance = false;
  double speed_constant = 1.0;         // k_s
  /// Uses k_s = 0.1 in place of speed_constant.
  bool prevent_overlap = false;
  std::size_t iterations = 600;
  /// Global speed used when global swinging is exactly zero.
  double max_global_speed = 10.0;
  /// Max displacement below which an iteration counts as converged (trace only).
  double convergence_tolerance = 1e-3;

  double effective_speed_constant() const { return prevent_overlap ? 0.1 : speed_constant; }
};

/// Throws ValidationError on out-of-range parameters.
void validate(const LayoutParams& params);

/// Distances below this are floored; coincident nodes are separated along
/// the x axis, lower node index on the left.
inline constexpr double kMinDistance = 1e-4;

/// Force on the first endpoint of an edge: magnitude w^delta * d, pointing at
/// the second endpoint. The second endpoint receives the negation.
Vec2 attraction_force(double weight, const Vec2& p1, const Vec2& p2, double delta,
                      bool first_is_lower = true);

/// S (deg1 + 1)(deg2 + 1).
double repulsion_numerator(double degree1, double degree2, double scale);

/// Force on the first node: magnitude S (deg1+1)(deg2+1) / d, pointing away
/// from the second node.
Vec2 repulsion_force(double degree1, double degree2, const Vec2& p1, const Vec2& p2, double scale,
                     bool first_is_lower = true);

struct ForceState {
  std::vector<Vec2> current_force;
  std::vector<Vec2> previous_force;  // zero before the first iteration
  std::vector<double> swinging;
  std::vector<double> traction;
  std::vector<double> speed;
  double global_speed = 0.0;
  double global_swinging = 0.0;
  double global_traction = 0.0;
  double tolerance = 1.0;  // tau actually used, after any adaptive halving

  explicit ForceState(std::size_t nodes = 0, double tau = 1.0);
};

struct IterationRecord {
  std::size_t iteration = 0;  // 1-based
  double global_speed = 0.0;
  double global_swinging = 0.0;
  double global_traction = 0.0;
  double max_displacement = 0.0;
  double tolerance = 0.0;
};

/// Net forces on every node for the given positions.
std::vector<Vec2> net_forces(const LayoutGraph& graph, const Positions& positions,
                             const LayoutParams& params);

/// One synchronous ForceAtlas2 iteration: forces, swinging/traction, speeds,
/// then all displacements applied at once.
IterationRecord iterate(const LayoutGraph& graph, Positions& positions, ForceState& state,
                        const LayoutParams& params, std::size_t iteration = 1);

/// Uniform positions in [0, extent)^2 from a 64-bit Mersenne Twister; the
/// mapping to doubles is fixed so results are identical across platforms.
Positions random_positions(std::size_t count, std::uint64_t seed, double extent = 1000.0);

struct LayoutResult {
  Positions initial;
  Positions positions;
  std::vector<IterationRecord> trace;
  std::optional<std::uint64_t> seed;      // set when positions were randomly initialized
  std::optional<std::size_t> converged_at;  // first iteration under the convergence tolerance
};

/// Runs params.iterations iterations from `initial` or, when absent, from
/// random_positions(seed).
LayoutResult run_layout(const LayoutGraph& graph, const LayoutParams& params,
                        const std::optional<Positions>& initial, std::uint64_t seed = 0);

/// {"date": ..., "seed": int|null, "positions": {ticker: [x, y]}}
std::string format_layout_json(const std::string& date, std::optional<std::uint64_t> seed,
                               const std::vector<std::string>& nodes, const Positions& positions);

struct LayoutFile {
  std::string date;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> nodes;
  Positions positions;
};

LayoutFile parse_layout_json(std::string_view text);

/// iteration,global_speed,global_swinging,global_traction,max_displacement
std::string format_trace_csv(const std::vector<IterationRecord>& trace);

}  // namespace volnet::layout
