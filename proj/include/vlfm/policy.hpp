#pragma once

// Waypoint planner and the three-phase exploration controller:
// initialisation spin, value-guided frontier exploration, goal navigation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <numbers>
#include <optional>
#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vlfm/core_grid.hpp"
#include "vlfm/frontier.hpp"
#include "vlfm/mapping.hpp"
#include "vlfm/value_map.hpp"

namespace vlfm {

inline constexpr double kForwardStep = 0.25;
inline constexpr double kTurnAngle = std::numbers::pi / 6.0;
inline constexpr int kSpinTurns = 12;

enum class Action { MoveForward, TurnLeft, TurnRight, LookUp, LookDown, Stop };

inline std::string_view to_string(Action a) {
  switch (a) {
    case Action::MoveForward: return "move_forward";
    case Action::TurnLeft: return "turn_left";
    case Action::TurnRight: return "turn_right";
    case Action::LookUp: return "look_up";
    case Action::LookDown: return "look_down";
    case Action::Stop: return "stop";
  }
  return "?";
}

inline Action parse_action(std::string_view s) {
  for (Action a : {Action::MoveForward, Action::TurnLeft, Action::TurnRight, Action::LookUp, Action::LookDown,
                   Action::Stop}) {
    if (to_string(a) == s) return a;
  }
  throw std::invalid_argument("unknown action: " + std::string(s));
}

enum class PhaseKind { Initialization, Exploration, GoalNavigation };

struct AgentPhase {
  PhaseKind kind = PhaseKind::Initialization;
  int turns_done = 0;  // Initialization only
  Point2 goal{};       // GoalNavigation only

  friend bool operator==(const AgentPhase&, const AgentPhase&) = default;
};

inline std::string_view to_string(PhaseKind k) {
  switch (k) {
    case PhaseKind::Initialization: return "initialization";
    case PhaseKind::Exploration: return "exploration";
    case PhaseKind::GoalNavigation: return "goal_navigation";
  }
  return "?";
}

class UnreachableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PlannerParams {
  double inflation = 0.25;      // meters around obstacle cells
  double unknown_cost = 1.5;    // multiplier for unexplored cells
  double inflated_cost = 5.0;   // multiplier for cells inside the inflation radius
  double lookahead = 0.5;       // carrot distance along the path
  double arrive_tolerance = 0.125;
};

struct Plan {
  Point2 waypoint{};
  std::vector<Cell> path;  // start cell first, goal cell last
  std::deque<Action> actions;
  double cost = 0.0;  // meters, weighted by the cell multipliers
  GridSpec spec{};
};

/// Per-cell traversal multiplier, evaluated on demand and memoised: 0 for
/// obstacles, `inflated_cost` within the inflation radius of one, else
/// `unknown_cost` for unexplored cells and 1 for explored free cells. Holds a
/// reference to the map, which must outlive it and stay unchanged.
class CostField {
 public:
  CostField(const ObstacleMap& map, const PlannerParams& params)
      : map_(&map), spec_(map.spec()), memo_(spec_.cell_count(), kUnset) {
    const double rc = params.inflation / spec_.resolution;
    radius_ = static_cast<int>(std::floor(rc + 1e-9));
    for (int dr = -radius_; dr <= radius_; ++dr) {
      for (int dc = -radius_; dc <= radius_; ++dc) {
        if (dr * dr + dc * dc > rc * rc + 1e-9) continue;
        offsets_.push_back({dr, dc});
        linear_.push_back(static_cast<std::ptrdiff_t>(dr) * spec_.width + dc);
      }
    }
    value_ = {0.0, 0.0, 1.0, params.unknown_cost, std::max(1.0, params.inflated_cost),
              std::max(params.unknown_cost, params.inflated_cost)};
  }

  const GridSpec& spec() const { return spec_; }

  /// Multiplier for entering c, 0 if forbidden or outside the grid.
  double at(Cell c) const {
    if (!spec_.contains(c)) return 0.0;
    return at_index(spec_.index(c));
  }

  /// Same as at() for a linear index known to be inside the grid.
  double at_index(std::size_t i) const {
    std::uint8_t& m = memo_[i];
    if (m == kUnset) m = classify(spec_.cell_at(i), i);
    return value_[m];
  }

 private:
  enum : std::uint8_t { kUnset, kBlocked, kFree, kUnknown, kInflatedFree, kInflatedUnknown };

  std::uint8_t classify(Cell c, std::size_t i) const {
    const std::uint8_t* obstacle = map_->obstacle.data().data();
    if (obstacle[i]) return kBlocked;
    const bool known = map_->explored.data()[i] != 0;
    bool near = false;
    const bool interior = c.row >= radius_ && c.col >= radius_ && c.row < spec_.height - radius_ && c.col < spec_.width - radius_;
    if (interior) {
      const std::uint8_t* centre = obstacle + i;
      for (std::ptrdiff_t d : linear_) {
        if (centre[d]) {
          near = true;
          break;
        }
      }
    } else {
      for (const Cell& d : offsets_) {
        const Cell n{c.row + d.row, c.col + d.col};
        if (spec_.contains(n) && map_->obstacle[n]) {
          near = true;
          break;
        }
      }
    }
    if (near) return known ? kInflatedFree : kInflatedUnknown;
    return known ? kFree : kUnknown;
  }

  const ObstacleMap* map_;
  GridSpec spec_;
  int radius_ = 0;
  std::vector<Cell> offsets_;
  std::vector<std::ptrdiff_t> linear_;
  std::array<double, 6> value_{};
  mutable std::vector<std::uint8_t> memo_;
};

namespace detail {

/// One carrot-following decision from `pose` along `path` towards `goal`.
/// Returns nullopt once the goal is reached.
inline std::optional<Action> follow_step(const Pose2D& pose, std::span<const Point2> path, Point2 goal,
                                         const PlannerParams& params) {
  const double d_goal = distance(pose.position(), goal);
  if (d_goal <= params.arrive_tolerance) return std::nullopt;
  // Nearest path point, then the first point beyond the lookahead.
  const Point2 here = pose.position();
  auto dist2 = [&](Point2 p) { return (p.x - here.x) * (p.x - here.x) + (p.y - here.y) * (p.y - here.y); };
  std::size_t nearest = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < path.size(); ++i) {
    const double d = dist2(path[i]);
    if (d < best) best = d, nearest = i;
  }
  Point2 carrot = goal;
  const double look2 = params.lookahead * params.lookahead;
  for (std::size_t i = nearest; i < path.size(); ++i) {
    if (dist2(path[i]) >= look2) {
      carrot = path[i];
      break;
    }
  }
  const double bearing = normalize_angle(std::atan2(carrot.y - pose.y, carrot.x - pose.x) - pose.heading());
  const long turns = std::lround(bearing / kTurnAngle);
  if (turns > 0) return Action::TurnLeft;
  if (turns < 0) return Action::TurnRight;
  // Close to the goal: stop if another step would not bring us closer.
  if (d_goal < kForwardStep) {
    const Point2 next = pose.position() + kForwardStep * pose.direction();
    if (distance(next, goal) >= d_goal) return std::nullopt;
  }
  return Action::MoveForward;
}

inline void apply_virtual(Pose2D& pose, Action a) {
  switch (a) {
    case Action::MoveForward: {
      const Point2 p = pose.position() + kForwardStep * pose.direction();
      pose.x = p.x, pose.y = p.y;
      break;
    }
    case Action::TurnLeft: pose.rotate(kTurnAngle); break;
    case Action::TurnRight: pose.rotate(-kTurnAngle); break;
    default: break;
  }
}

}  // namespace detail

inline std::vector<Point2> path_points(const Plan& plan) {
  std::vector<Point2> pts;
  pts.reserve(plan.path.size());
  for (const Cell& c : plan.path) pts.push_back(grid_to_world(c, plan.spec));
  if (!pts.empty()) pts.back() = plan.waypoint;
  return pts;
}

namespace detail {

/// Per-thread A* buffers. Entries are valid only where stamp == generation,
/// which avoids clearing full-grid arrays on every search.
struct SearchScratch {
  std::vector<double> dist;
  std::vector<std::int32_t> parent;
  std::vector<std::uint32_t> stamp;
  std::uint32_t generation = 0;

  void begin(std::size_t cells) {
    if (stamp.size() < cells) {
      dist.resize(cells);
      parent.resize(cells);
      stamp.assign(cells, 0);
      generation = 0;
    }
    if (++generation == 0) {
      std::fill(stamp.begin(), stamp.end(), 0u);
      generation = 1;
    }
  }
  double g(std::size_t i) const { return stamp[i] == generation ? dist[i] : std::numeric_limits<double>::infinity(); }
  void set(std::size_t i, double d, std::int32_t p) {
    stamp[i] = generation;
    dist[i] = d;
    parent[i] = p;
  }
};

inline SearchScratch& search_scratch() {
  thread_local SearchScratch scratch;
  return scratch;
}

}  // namespace detail

/// A* over 8-connected cells: obstacles forbidden (except the goal cell),
/// cells near obstacles and unexplored cells penalised, diagonal steps cost
/// sqrt(2) and may not cut obstacle corners. The action queue follows the path
/// turning in 30 degree increments before each forward step.
inline Plan plan_path(const CostField& field, const Pose2D& from, Point2 to, const PlannerParams& params = {}) {
  const GridSpec& spec = field.spec();
  Plan plan;
  plan.waypoint = to;
  plan.spec = spec;
  const Cell s = world_to_grid(from.position(), spec);
  const Cell g = world_to_grid(to, spec);
  if (s == g) {
    plan.path = {s};
    if (distance(from.position(), to) <= params.arrive_tolerance) plan.path.clear();
  } else {
    const double res = spec.resolution;
    const std::size_t gi = spec.index(g);
    auto h = [&](Cell c) {
      const int dr = std::abs(c.row - g.row), dc = std::abs(c.col - g.col);
      return res * (std::max(dr, dc) + (std::numbers::sqrt2 - 1.0) * std::min(dr, dc));
    };
    detail::SearchScratch& sc = detail::search_scratch();
    sc.begin(spec.cell_count());
    struct Item {
      double f;
      std::uint32_t idx;
      double g;
      bool operator>(const Item& o) const { return f > o.f || (f == o.f && idx > o.idx); }
    };
    std::vector<Item> heap;
    heap.reserve(1024);
    auto push = [&](double f, std::size_t i, double gv) {
      heap.push_back({f, static_cast<std::uint32_t>(i), gv});
      std::push_heap(heap.begin(), heap.end(), std::greater<>{});
    };
    sc.set(spec.index(s), 0.0, -1);
    push(h(s), spec.index(s), 0.0);
    bool found = false;
    const double step_cost[2] = {res, res * std::numbers::sqrt2};
    // Neighbours in kNeighbors8 order (row-major 3x3 minus centre) as index
    // offsets, and the two orthogonal neighbours flanking each diagonal.
    std::array<std::ptrdiff_t, 8> offset{};
    for (std::size_t k = 0; k < 8; ++k) offset[k] = static_cast<std::ptrdiff_t>(kNeighbors8[k][0]) * spec.width + kNeighbors8[k][1];
    static constexpr std::array<std::array<int, 2>, 8> kFlank{{{1, 3}, {-1, -1}, {1, 4}, {-1, -1}, {-1, -1}, {6, 3}, {-1, -1}, {6, 4}}};
    while (!heap.empty()) {
      std::pop_heap(heap.begin(), heap.end(), std::greater<>{});
      const Item top = heap.back();
      heap.pop_back();
      const std::size_t idx = top.idx;
      const double gc = sc.g(idx);
      if (top.g > gc) continue;
      if (idx == gi) {
        found = true;
        break;
      }
      const Cell c = spec.cell_at(idx);
      const bool interior = c.row > 0 && c.col > 0 && c.row < spec.height - 1 && c.col < spec.width - 1;
      std::array<double, 8> m;
      for (std::size_t k = 0; k < 8; ++k) {
        if (interior) {
          const std::size_t ni = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(idx) + offset[k]);
          m[k] = field.at_index(ni);
          if (ni == gi) m[k] = std::max(m[k], 1.0);
        } else {
          const Cell n{c.row + kNeighbors8[k][0], c.col + kNeighbors8[k][1]};
          m[k] = field.at(n);
          if (n == g) m[k] = std::max(m[k], 1.0);
        }
      }
      for (std::size_t k = 0; k < 8; ++k) {
        if (m[k] <= 0.0) continue;
        const bool diag = kFlank[k][0] >= 0;
        if (diag && (m[static_cast<std::size_t>(kFlank[k][0])] <= 0.0 || m[static_cast<std::size_t>(kFlank[k][1])] <= 0.0)) continue;
        const double nd = gc + step_cost[diag ? 1 : 0] * m[k];
        const std::size_t ni = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(idx) + offset[k]);
        if (nd < sc.g(ni)) {
          sc.set(ni, nd, static_cast<std::int32_t>(idx));
          push(nd + h({c.row + kNeighbors8[k][0], c.col + kNeighbors8[k][1]}), ni, nd);
        }
      }
    }
    if (!found) throw UnreachableError("no path to waypoint");
    plan.cost = sc.g(spec.index(g));
    for (std::int32_t i = static_cast<std::int32_t>(spec.index(g)); i >= 0; i = sc.parent[static_cast<std::size_t>(i)]) {
      plan.path.push_back(spec.cell_at(static_cast<std::size_t>(i)));
    }
    std::reverse(plan.path.begin(), plan.path.end());
  }
  if (plan.path.empty()) return plan;

  const std::vector<Point2> pts = path_points(plan);
  Pose2D virt = from;
  const std::size_t cap = 4 * plan.path.size() + 4 * kSpinTurns;
  while (plan.actions.size() < cap) {
    const auto a = detail::follow_step(virt, pts, to, params);
    if (!a) break;
    plan.actions.push_back(*a);
    detail::apply_virtual(virt, *a);
  }
  return plan;
}

inline Plan plan_path(const ObstacleMap& map, const Pose2D& from, Point2 to, const PlannerParams& params = {}) {
  return plan_path(CostField(map, params), from, to, params);
}

/// Index of the highest value; ties go to the smaller distance, then the lower index.
inline std::size_t argmax_with_tiebreak(std::span<const double> values, std::span<const double> distances) {
  if (values.empty()) throw std::invalid_argument("cannot select from an empty frontier list");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best] || (values[i] == values[best] && distances[i] < distances[best])) best = i;
  }
  return best;
}

/// Frontier with the highest value-map score, nearest first on ties.
inline std::size_t select_frontier(std::span<const Frontier> frontiers, const ValueMap& vmap, Point2 agent) {
  if (frontiers.empty()) throw std::invalid_argument("cannot select from an empty frontier list");
  std::vector<double> values, dists;
  for (const Frontier& f : frontiers) {
    values.push_back(frontier_value(vmap, f));
    dists.push_back(distance(agent, f.midpoint));
  }
  return argmax_with_tiebreak(values, dists);
}

/// Greedy baseline: the frontier whose midpoint is closest to the agent.
inline std::size_t select_nearest_frontier(std::span<const Frontier> frontiers, Point2 agent) {
  if (frontiers.empty()) throw std::invalid_argument("cannot select from an empty frontier list");
  std::size_t best = 0;
  for (std::size_t i = 1; i < frontiers.size(); ++i) {
    if (distance(agent, frontiers[i].midpoint) < distance(agent, frontiers[best].midpoint)) best = i;
  }
  return best;
}

enum class FrontierSelection { Value, Nearest };

struct PolicyParams {
  FrontierSelection selection = FrontierSelection::Value;
  double success_radius = 1.0;
  double stop_margin = 0.1;
  int replan_interval = 10;
  double waypoint_tolerance = 0.5;  // midpoint drift that keeps the current path
  double blacklist_radius = 0.5;
  double arrival_radius = 0.25;  // reaching a frontier midpoint without it clearing
  int max_collisions = 3;
  PlannerParams planner{};
};

struct Decision {
  Action action = Action::Stop;
  AgentPhase phase{};
  std::optional<Point2> selected_midpoint;
  bool no_frontiers = false;
};

/// Map state the controller reads each step.
struct MapsView {
  const ObstacleMap* obstacles = nullptr;
  const ValueMap* values = nullptr;
  /// Obstacle cells added since the previous decision (current indexing).
  std::span<const Cell> new_obstacles{};
  /// True if the grid was resized since the previous decision.
  bool resized = false;
};

struct Sighting {
  Point2 goal;
  double distance = 0.0;
};

class Controller {
 public:
  explicit Controller(PolicyParams params = {}) : params_(params) {}

  const AgentPhase& phase() const { return phase_; }
  const PolicyParams& params() const { return params_; }
  std::size_t blacklist_size() const { return blacklist_.size(); }

  /// Reports how far the last MoveForward actually travelled.
  void notify_motion(double travelled) {
    collisions_ = travelled < 0.5 * kForwardStep ? collisions_ + 1 : 0;
  }

  Decision next_action(const MapsView& maps, std::span<const Frontier> frontiers, const std::optional<Sighting>& detection,
                       const Pose2D& pose) {
    Decision d = decide(maps, frontiers, detection, pose);
    if (d.action == Action::Stop) {
      if (stopped_) throw std::logic_error("controller already emitted stop");
      stopped_ = true;
    }
    d.phase = phase_;
    return d;
  }

 private:
  Decision decide(const MapsView& maps, std::span<const Frontier> frontiers, const std::optional<Sighting>& detection,
                  const Pose2D& pose) {
    ++plan_age_;
    if (maps.resized) plan_.reset();
    if (plan_ && path_blocked(maps.new_obstacles)) plan_.reset();

    if (detection) {
      if (phase_.kind != PhaseKind::GoalNavigation || distance(phase_.goal, detection->goal) > 1e-9) plan_.reset();
      phase_ = AgentPhase{PhaseKind::GoalNavigation, 0, detection->goal};
    }
    if (phase_.kind == PhaseKind::GoalNavigation) return navigate_to_goal(maps, pose);

    if (phase_.kind == PhaseKind::Initialization) {
      if (phase_.turns_done < kSpinTurns) {
        ++phase_.turns_done;
        return {Action::TurnLeft, phase_, std::nullopt, false};
      }
      phase_ = AgentPhase{PhaseKind::Exploration, 0, {}};
    }
    return explore(maps, frontiers, pose);
  }

  Decision navigate_to_goal(const MapsView& maps, const Pose2D& pose) {
    const double stop_at = params_.success_radius - params_.stop_margin;
    if (distance(pose.position(), phase_.goal) <= stop_at) return {Action::Stop, phase_, std::nullopt, false};
    if (collisions_ >= params_.max_collisions) {
      plan_.reset();
      collisions_ = 0;
    }
    if (!ensure_plan(maps, pose, phase_.goal)) return {Action::TurnLeft, phase_, std::nullopt, false};
    const auto a = follow(pose);
    // Path exhausted but still outside the stop radius: approach directly.
    return {a.value_or(Action::MoveForward), phase_, std::nullopt, false};
  }

  Decision explore(const MapsView& maps, std::span<const Frontier> frontiers, const Pose2D& pose) {
    std::vector<Frontier> candidates;
    for (const Frontier& f : frontiers) {
      if (!is_blacklisted(f.midpoint)) candidates.push_back(f);
    }
    if (collisions_ >= params_.max_collisions && plan_) {
      blacklist_.push_back(plan_->waypoint);
      plan_.reset();
      collisions_ = 0;
    }
    while (!candidates.empty()) {
      const std::size_t i = params_.selection == FrontierSelection::Value
                                ? select_frontier(candidates, *maps.values, pose.position())
                                : select_nearest_frontier(candidates, pose.position());
      const Point2 target = candidates[i].midpoint;
      if (distance(pose.position(), target) <= params_.arrival_radius) {
        blacklist_.push_back(target);
        candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(i));
        continue;
      }
      if (!ensure_plan(maps, pose, target)) {
        blacklist_.push_back(target);
        candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(i));
        continue;
      }
      if (const auto a = follow(pose)) return {*a, phase_, target, false};
      blacklist_.push_back(target);
      plan_.reset();
      candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(i));
    }
    return {Action::Stop, phase_, std::nullopt, true};
  }

  /// Keeps the current plan if it still leads near `target`; otherwise replans.
  bool ensure_plan(const MapsView& maps, const Pose2D& pose, Point2 target) {
    const bool stale = !plan_ || plan_age_ >= params_.replan_interval ||
                       distance(plan_->waypoint, target) > params_.waypoint_tolerance || off_path(pose);
    if (!stale) {
      plan_->waypoint = target;
      return true;
    }
    plan_.reset();
    try {
      plan_ = plan_path(*maps.obstacles, pose, target, params_.planner);
      plan_points_ = path_points(*plan_);
      plan_age_ = 0;
      return true;
    } catch (const UnreachableError&) {
      return false;
    } catch (const GridError&) {
      return false;
    }
  }

  std::optional<Action> follow(const Pose2D& pose) const {
    if (!plan_ || plan_->path.empty()) return std::nullopt;
    return detail::follow_step(pose, plan_points_, plan_->waypoint, params_.planner);
  }

  bool off_path(const Pose2D& pose) const {
    if (plan_points_.empty()) return false;
    double best = std::numeric_limits<double>::infinity();
    for (const Point2& p : plan_points_) best = std::min(best, distance(p, pose.position()));
    return best > 0.5;
  }

  bool path_blocked(std::span<const Cell> new_obstacles) {
    if (new_obstacles.empty()) return false;
    const double r = params_.planner.inflation + plan_->spec.resolution;
    for (const Cell& o : new_obstacles) {
      const Point2 q = grid_to_world(o, plan_->spec);
      for (const Point2& p : plan_points_) {
        if (distance(p, q) <= r) return true;
      }
    }
    return false;
  }

  bool is_blacklisted(Point2 p) const {
    return std::any_of(blacklist_.begin(), blacklist_.end(),
                       [&](Point2 b) { return distance(b, p) <= params_.blacklist_radius; });
  }

  PolicyParams params_;
  AgentPhase phase_{};
  std::optional<Plan> plan_;
  std::vector<Point2> plan_points_;
  int plan_age_ = 0;
  int collisions_ = 0;
  bool stopped_ = false;
  std::vector<Point2> blacklist_;
};

}  // namespace vlfm
