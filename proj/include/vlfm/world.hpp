#pragma once

// Procedural 2D indoor worlds and the simulated sensors that observe them:
// depth raycasting, line-of-sight target detection and point kinematics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "vlfm/core_grid.hpp"
#include "vlfm/mapping.hpp"
#include "vlfm/raycast.hpp"
#include "vlfm/rng.hpp"
#include "vlfm/scorer.hpp"

namespace vlfm {

class WorldError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TargetObject {
  std::string category;
  std::vector<Cell> cells;
};

struct Room {
  int row0 = 0, col0 = 0, rows = 0, cols = 0;
  bool contains(Cell c) const { return c.row >= row0 && c.row < row0 + rows && c.col >= col0 && c.col < col0 + cols; }
  Cell centre() const { return {row0 + rows / 2, col0 + cols / 2}; }
};

struct World {
  Grid<std::uint8_t> obstacle;  // ground truth; target objects are obstacles too
  std::vector<TargetObject> targets;
  std::vector<Room> rooms;
  std::vector<std::string> categories;
  Pose2D start;
  std::string start_category;
  std::uint64_t seed = 0;

  const GridSpec& spec() const { return obstacle.spec(); }
  /// Outside the grid counts as solid.
  bool is_obstacle(Cell c) const { return !obstacle.contains(c) || obstacle[c] != 0; }
  bool is_free(Point2 p) const { return !is_obstacle(spec().nearest_cell(p)); }

  std::vector<Cell> target_cells(const std::string& category) const {
    std::vector<Cell> out;
    for (const auto& t : targets) {
      if (t.category == category) out.insert(out.end(), t.cells.begin(), t.cells.end());
    }
    return out;
  }
};

struct WorldParams {
  double size = 25.6;  // meters per side
  double resolution = kDefaultResolution;
  int room_count = 0;  // 0 picks 4..8
  double clutter = 0.03;  // fraction of each room interior covered by clutter
  std::vector<std::string> categories{"bed", "toilet", "couch"};
  int instances_per_category = 2;
  std::uint64_t seed = 0;
  int max_attempts = 50;
};

/// Builds a world from text: '#' wall, '.' free, 'S' start (free), and a
/// lowercase letter for a target cell of category `legend[letter]`. The first
/// line is row 0.
inline World world_from_ascii(const std::vector<std::string>& lines, double resolution,
                              const std::vector<std::pair<char, std::string>>& legend, double start_heading = 0.0) {
  if (lines.empty()) throw WorldError("empty world text");
  GridSpec spec;
  spec.resolution = resolution;
  spec.height = static_cast<int>(lines.size());
  spec.width = static_cast<int>(lines.front().size());
  World w;
  w.obstacle = Grid<std::uint8_t>(spec, 0);
  bool have_start = false;
  for (int r = 0; r < spec.height; ++r) {
    if (static_cast<int>(lines[static_cast<std::size_t>(r)].size()) != spec.width) throw WorldError("ragged world text");
    for (int c = 0; c < spec.width; ++c) {
      const char ch = lines[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      if (ch == '#') {
        w.obstacle[{r, c}] = 1;
      } else if (ch == 'S') {
        const Point2 p = grid_to_world({r, c}, spec);
        w.start = Pose2D(p.x, p.y, start_heading);
        have_start = true;
      } else if (ch >= 'a' && ch <= 'z') {
        auto it = std::find_if(legend.begin(), legend.end(), [&](const auto& e) { return e.first == ch; });
        if (it == legend.end()) throw WorldError(std::string("no legend entry for '") + ch + "'");
        w.obstacle[{r, c}] = 1;
        auto t = std::find_if(w.targets.begin(), w.targets.end(), [&](const auto& o) { return o.category == it->second; });
        if (t == w.targets.end()) {
          w.targets.push_back({it->second, {}});
          t = std::prev(w.targets.end());
        }
        t->cells.push_back({r, c});
      } else if (ch != '.') {
        throw WorldError(std::string("unknown world character '") + ch + "'");
      }
    }
  }
  if (!have_start) throw WorldError("world text has no start 'S'");
  for (const auto& e : legend) w.categories.push_back(e.second);
  if (!w.categories.empty()) w.start_category = w.categories.front();
  return w;
}

namespace detail {

/// Flood fill over free cells from `seed`; returns the reached mask.
inline std::vector<std::uint8_t> flood_free(const Grid<std::uint8_t>& occ, Cell seed) {
  const GridSpec& spec = occ.spec();
  std::vector<std::uint8_t> seen(spec.cell_count(), 0);
  if (!spec.contains(seed) || occ[seed] != 0) return seen;
  std::vector<Cell> stack{seed};
  seen[spec.index(seed)] = 1;
  while (!stack.empty()) {
    const Cell c = stack.back();
    stack.pop_back();
    for (const auto& d : kNeighbors4) {
      const Cell n{c.row + d[0], c.col + d[1]};
      if (!spec.contains(n) || occ[n] != 0 || seen[spec.index(n)]) continue;
      seen[spec.index(n)] = 1;
      stack.push_back(n);
    }
  }
  return seen;
}

inline std::size_t count_free(const Grid<std::uint8_t>& occ) {
  return static_cast<std::size_t>(std::count(occ.data().begin(), occ.data().end(), std::uint8_t{0}));
}

inline bool free_space_connected(const Grid<std::uint8_t>& occ) {
  const auto& d = occ.data();
  const auto it = std::find(d.begin(), d.end(), std::uint8_t{0});
  if (it == d.end()) return true;
  const auto seen = flood_free(occ, occ.spec().cell_at(static_cast<std::size_t>(it - d.begin())));
  return static_cast<std::size_t>(std::count(seen.begin(), seen.end(), std::uint8_t{1})) == count_free(occ);
}

inline void fill_rect(Grid<std::uint8_t>& g, int r0, int c0, int rows, int cols, std::uint8_t v) {
  for (int r = r0; r < r0 + rows; ++r) {
    for (int c = c0; c < c0 + cols; ++c) {
      if (g.contains({r, c})) g[{r, c}] = v;
    }
  }
}

}  // namespace detail

/// 8-connected geodesic distance (meters) from the given source cells over
/// free space. Diagonal steps need both orthogonal neighbours free.
inline Grid<double> geodesic_distance(const World& world, const std::vector<Cell>& sources) {
  const GridSpec& spec = world.spec();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  Grid<double> dist(spec, kInf);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  for (const Cell& s : sources) {
    if (!spec.contains(s)) continue;
    dist[s] = 0.0;
    open.push({0.0, spec.index(s)});
  }
  const double res = spec.resolution;
  const double diag = res * std::numbers::sqrt2;
  while (!open.empty()) {
    const auto [d, idx] = open.top();
    open.pop();
    if (d > dist.data()[idx]) continue;
    const Cell c = spec.cell_at(idx);
    for (const auto& o : kNeighbors8) {
      const Cell n{c.row + o[0], c.col + o[1]};
      if (world.is_obstacle(n)) continue;
      const bool is_diag = o[0] != 0 && o[1] != 0;
      if (is_diag && (world.is_obstacle({c.row + o[0], c.col}) || world.is_obstacle({c.row, c.col + o[1]}))) continue;
      const double nd = d + (is_diag ? diag : res);
      if (nd < dist[n]) {
        dist[n] = nd;
        open.push({nd, spec.index(n)});
      }
    }
  }
  return dist;
}

inline TargetField make_target_field(const World& world, const std::string& category) {
  return {category, geodesic_distance(world, world.target_cells(category))};
}

/// Distance from p to the closest point of any cell of `category`.
inline double distance_to_category(const World& world, Point2 p, const std::string& category) {
  const double half = world.spec().resolution / 2.0;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& t : world.targets) {
    if (t.category != category) continue;
    for (const Cell& c : t.cells) {
      const Point2 q = grid_to_world(c, world.spec());
      const double dx = std::max(0.0, std::abs(p.x - q.x) - half);
      const double dy = std::max(0.0, std::abs(p.y - q.y) - half);
      best = std::min(best, std::hypot(dx, dy));
    }
  }
  return best;
}

/// True if some free cell connected to the start touches a target of `category`.
inline bool is_solvable(const World& world, const std::string& category) {
  const Cell s = world.spec().nearest_cell(world.start.position());
  const auto seen = detail::flood_free(world.obstacle, s);
  for (const Cell& t : world.target_cells(category)) {
    for (const auto& d : kNeighbors4) {
      const Cell n{t.row + d[0], t.col + d[1]};
      if (world.spec().contains(n) && seen[world.spec().index(n)]) return true;
    }
  }
  return false;
}

namespace detail {

inline bool try_generate(const WorldParams& p, std::uint64_t sub_seed, World& out) {
  SplitMix rng(mix_keys(p.seed, sub_seed));
  GridSpec spec;
  spec.resolution = p.resolution;
  spec.width = spec.height = static_cast<int>(std::lround(p.size / p.resolution));
  spec.origin = {0.0, 0.0};
  Grid<std::uint8_t> occ(spec, 1);
  const int n = spec.width;
  const double cells_per_m = 1.0 / p.resolution;
  const int room_min = std::max(4, static_cast<int>(std::lround(3.0 * cells_per_m)));
  const int room_max = std::max(room_min, std::min(n - 4, static_cast<int>(std::lround(7.0 * cells_per_m))));
  const int rooms_wanted = p.room_count > 0 ? p.room_count : rng.uniform_int(4, 8);

  std::vector<Room> rooms;
  for (int attempt = 0; attempt < 400 && static_cast<int>(rooms.size()) < rooms_wanted; ++attempt) {
    Room r;
    r.rows = rng.uniform_int(room_min, room_max);
    r.cols = rng.uniform_int(room_min, room_max);
    if (r.rows > n - 4 || r.cols > n - 4) continue;
    r.row0 = rng.uniform_int(2, n - 2 - r.rows);
    r.col0 = rng.uniform_int(2, n - 2 - r.cols);
    const int gap = 3;
    const bool overlaps = std::any_of(rooms.begin(), rooms.end(), [&](const Room& o) {
      return r.row0 < o.row0 + o.rows + gap && o.row0 < r.row0 + r.rows + gap && r.col0 < o.col0 + o.cols + gap &&
             o.col0 < r.col0 + r.cols + gap;
    });
    if (!overlaps) rooms.push_back(r);
  }
  if (static_cast<int>(rooms.size()) < rooms_wanted) return false;
  for (const Room& r : rooms) fill_rect(occ, r.row0, r.col0, r.rows, r.cols, 0);

  // Corridors along a minimum spanning tree of room centres (Prim).
  const int corridor_w = std::max(2, static_cast<int>(std::lround(1.0 * cells_per_m)));
  std::vector<bool> in_tree(rooms.size(), false);
  in_tree[0] = true;
  auto carve = [&](Cell a, Cell b) {
    const int h = corridor_w / 2;
    const bool horizontal_first = rng.uniform_int(0, 1) == 0;
    const Cell bend = horizontal_first ? Cell{a.row, b.col} : Cell{b.row, a.col};
    for (auto [from, to] : {std::pair{a, bend}, std::pair{bend, b}}) {
      const int r0 = std::min(from.row, to.row) - h, r1 = std::max(from.row, to.row) - h + corridor_w;
      const int c0 = std::min(from.col, to.col) - h, c1 = std::max(from.col, to.col) - h + corridor_w;
      fill_rect(occ, std::max(r0, 1), std::max(c0, 1), std::min(r1, n - 1) - std::max(r0, 1),
                std::min(c1, n - 1) - std::max(c0, 1), 0);
    }
  };
  for (std::size_t added = 1; added < rooms.size(); ++added) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < rooms.size(); ++i) {
      if (!in_tree[i]) continue;
      for (std::size_t j = 0; j < rooms.size(); ++j) {
        if (in_tree[j]) continue;
        const Cell a = rooms[i].centre(), b = rooms[j].centre();
        const double d = std::hypot(a.row - b.row, a.col - b.col);
        if (d < best) best = d, bi = i, bj = j;
      }
    }
    in_tree[bj] = true;
    carve(rooms[bi].centre(), rooms[bj].centre());
  }

  // Places a block inside a room interior, keeping free space connected.
  auto place_block = [&](const Room& room, int rows, int cols, std::vector<Cell>* cells) -> bool {
    if (room.rows < rows + 4 || room.cols < cols + 4) return false;
    for (int tries = 0; tries < 20; ++tries) {
      const int r0 = rng.uniform_int(room.row0 + 2, room.row0 + room.rows - 2 - rows);
      const int c0 = rng.uniform_int(room.col0 + 2, room.col0 + room.cols - 2 - cols);
      bool clear = true;
      for (int r = r0 - 1; r < r0 + rows + 1 && clear; ++r) {
        for (int c = c0 - 1; c < c0 + cols + 1 && clear; ++c) clear = occ[{r, c}] == 0;
      }
      if (!clear) continue;
      fill_rect(occ, r0, c0, rows, cols, 1);
      if (!free_space_connected(occ)) {
        fill_rect(occ, r0, c0, rows, cols, 0);
        continue;
      }
      if (cells != nullptr) {
        for (int r = r0; r < r0 + rows; ++r) {
          for (int c = c0; c < c0 + cols; ++c) cells->push_back({r, c});
        }
      }
      return true;
    }
    return false;
  };

  if (p.clutter > 0.0) {
    for (const Room& room : rooms) {
      const double area = static_cast<double>((room.rows - 4) * (room.cols - 4));
      const int blocks = static_cast<int>(std::lround(p.clutter * area / 25.0));
      for (int b = 0; b < blocks; ++b) place_block(room, rng.uniform_int(3, 7), rng.uniform_int(3, 7), nullptr);
    }
  }

  World w;
  w.rooms = rooms;
  w.categories = p.categories;
  w.seed = p.seed;
  for (const std::string& cat : p.categories) {
    for (int k = 0; k < p.instances_per_category; ++k) {
      TargetObject obj{cat, {}};
      bool placed = false;
      for (int tries = 0; tries < 20 && !placed; ++tries) {
        const Room& room = rooms[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(rooms.size()) - 1))];
        placed = place_block(room, rng.uniform_int(4, 8), rng.uniform_int(4, 8), &obj.cells);
      }
      if (!placed) return false;
      w.targets.push_back(std::move(obj));
    }
  }
  w.obstacle = std::move(occ);
  out = std::move(w);
  return true;
}

}  // namespace detail

/// True if every cell within `radius` cells (Chebyshev) of c is free.
inline bool has_clearance(const World& w, Cell c, int radius = 3) {
  for (int dr = -radius; dr <= radius; ++dr) {
    for (int dc = -radius; dc <= radius; ++dc) {
      if (w.is_obstacle({c.row + dr, c.col + dc})) return false;
    }
  }
  return true;
}

struct EpisodeSpec {
  Pose2D start;
  std::string category;
};

/// Picks a start pose and target category for one episode in `world`. The
/// start lies in a room with clearance, at least `min_geodesic` meters from
/// the target, and the target is reachable.
inline EpisodeSpec sample_episode(const World& world, std::uint64_t episode_seed, double min_geodesic = 3.0) {
  if (world.categories.empty() || world.rooms.empty()) throw WorldError("world has no categories or rooms");
  SplitMix rng(mix_keys(world.seed ^ 0x5eedULL, episode_seed));
  const std::string& category =
      world.categories[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(world.categories.size()) - 1))];
  const Grid<double> field = geodesic_distance(world, world.target_cells(category));
  for (int tries = 0; tries < 2000; ++tries) {
    const Room& room = world.rooms[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(world.rooms.size()) - 1))];
    const Cell c{rng.uniform_int(room.row0, room.row0 + room.rows - 1), rng.uniform_int(room.col0, room.col0 + room.cols - 1)};
    if (!has_clearance(world, c)) continue;
    const double g = field[c];
    if (!std::isfinite(g) || g < min_geodesic) continue;
    const Point2 p = grid_to_world(c, world.spec());
    const double heading = normalize_angle(rng.uniform_int(0, 11) * std::numbers::pi / 6.0);
    return {Pose2D(p.x, p.y, heading), category};
  }
  throw WorldError("could not sample a start pose");
}

inline World generate_world(const WorldParams& params) {
  if (!(params.size > 0.0) || !(params.resolution > 0.0)) throw std::invalid_argument("world size and resolution must be positive");
  if (params.categories.empty()) throw std::invalid_argument("world needs at least one category");
  if (params.room_count < 0) throw std::invalid_argument("room_count must be >= 0");
  if (params.clutter < 0.0 || params.clutter > 0.5) throw std::invalid_argument("clutter must lie in [0, 0.5]");
  for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
    World w;
    if (!detail::try_generate(params, static_cast<std::uint64_t>(attempt), w)) continue;
    try {
      const EpisodeSpec ep = sample_episode(w, 0);
      w.start = ep.start;
      w.start_category = ep.category;
    } catch (const WorldError&) {
      continue;
    }
    if (!is_solvable(w, w.start_category)) continue;
    return w;
  }
  throw WorldError("world generation exhausted " + std::to_string(params.max_attempts) + " attempts");
}

struct SensorParams {
  int rays = 64;
  double hfov = 79.0 * std::numbers::pi / 180.0;
  double min_range = 0.05;
  double max_range = 5.0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  double ray_height = 0.5;
};

/// First-hit range along each ray. Rays with no hit within max_range read
/// kNoReturn.
inline DepthScan render_depth(const World& world, const Pose2D& pose, const SensorParams& sensor,
                              std::uint64_t step = 0) {
  if (world.is_obstacle(world.spec().nearest_cell(pose.position()))) throw WorldError("pose is inside an obstacle");
  if (sensor.rays < 1) throw std::invalid_argument("sensor needs at least one ray");
  DepthScan scan;
  scan.hfov = sensor.hfov;
  scan.min_range = sensor.min_range;
  scan.max_range = sensor.max_range;
  scan.values.assign(static_cast<std::size_t>(sensor.rays), kNoReturn);
  scan.heights.assign(static_cast<std::size_t>(sensor.rays), sensor.ray_height);
  const GridSpec& spec = world.spec();
  const Point2 a = spec.to_grid_units(pose.position());
  const Cell start = spec.nearest_cell(pose.position());
  for (std::size_t k = 0; k < scan.size(); ++k) {
    const double ang = pose.heading() + scan.ray_angle(k);
    const Point2 end{pose.x + sensor.max_range * std::cos(ang), pose.y + sensor.max_range * std::sin(ang)};
    double hit = kNoReturn;
    traverse_segment(a, spec.to_grid_units(end), [&](Cell c, double t) {
      if (c == start || !world.is_obstacle(c)) return true;
      hit = t * sensor.max_range;
      return false;
    });
    if (DepthScan::is_return(hit)) {
      if (sensor.noise_sigma > 0.0) hit += sensor.noise_sigma * counter_normal(mix_keys(sensor.seed, step), k);
      hit = std::clamp(hit, sensor.min_range, sensor.max_range);
    }
    scan.values[k] = hit;
  }
  return scan;
}

struct Detection {
  std::string category;
  Point2 goal;
  double distance = 0.0;
};

/// Nearest visible cell of `category` within `range` and the FOV, if any.
inline std::optional<Detection> detect_target(const World& world, const Pose2D& pose, const std::string& category,
                                              double range, double hfov) {
  std::optional<Detection> best;
  const GridSpec& spec = world.spec();
  for (const auto& t : world.targets) {
    if (t.category != category) continue;
    for (const Cell& c : t.cells) {
      const Point2 q = grid_to_world(c, spec);
      const double d = distance(pose.position(), q);
      if (d > range || (best && d >= best->distance)) continue;
      const double theta = normalize_angle(std::atan2(q.y - pose.y, q.x - pose.x) - pose.heading());
      if (std::abs(theta) > hfov / 2.0) continue;
      if (!line_of_sight(spec, pose.position(), c, [&](Cell v) { return world.is_obstacle(v); })) continue;
      best = Detection{category, q, d};
    }
  }
  return best;
}

/// Moves `step` meters along the heading, stopping just short of the first
/// obstacle cell boundary. Returns the distance actually travelled.
inline double move_forward(const World& world, Pose2D& pose, double step) {
  const GridSpec& spec = world.spec();
  const Point2 from = pose.position();
  const Point2 to = from + step * pose.direction();
  const Cell start = spec.nearest_cell(from);
  double t_stop = 1.0;
  traverse_segment(spec.to_grid_units(from), spec.to_grid_units(to), [&](Cell c, double t) {
    if (c == start || !world.is_obstacle(c)) return true;
    t_stop = std::max(0.0, t - 1e-6 / step);
    return false;
  });
  const Point2 p = from + (t_stop * step) * pose.direction();
  pose.x = p.x;
  pose.y = p.y;
  return distance(from, p);
}

}  // namespace vlfm
