#pragma once

// Occupancy mapping from depth scans: obstacle projection, the
// occlusion-clipped field-of-view cone and the explored-area update.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "vlfm/core_grid.hpp"
#include "vlfm/raycast.hpp"

namespace vlfm {

inline constexpr double kNoReturn = std::numeric_limits<double>::infinity();

/// One horizontal scanline of range readings spanning the camera FOV.
/// Ray k points at heading + ray_angle(k); k = 0 is the rightmost ray.
struct DepthScan {
  std::vector<double> values;
  /// Optional per-ray height of the return above the floor (meters).
  std::vector<double> heights;
  double hfov = 79.0 * std::numbers::pi / 180.0;
  double min_range = 0.05;
  double max_range = 5.0;

  std::size_t size() const { return values.size(); }
  static bool is_return(double v) { return std::isfinite(v); }

  double ray_angle(std::size_t k) const {
    if (values.size() < 2) return 0.0;
    return -hfov / 2.0 + hfov * static_cast<double>(k) / static_cast<double>(values.size() - 1);
  }

  /// Range used for masking along ray k: the reading, or max_range on no return.
  double clip_range(std::size_t k) const {
    return is_return(values[k]) ? std::min(values[k], max_range) : max_range;
  }

  void validate() const {
    if (values.empty()) throw std::invalid_argument("depth scan has no rays");
    if (!(hfov > 0.0 && hfov < 2.0 * std::numbers::pi)) {
      throw std::invalid_argument("depth scan hfov must lie in (0, 2pi)");
    }
    if (!(min_range >= 0.0 && min_range <= max_range)) {
      throw std::invalid_argument("depth scan needs 0 <= min_range <= max_range");
    }
    if (!heights.empty() && heights.size() != values.size()) {
      throw std::invalid_argument("depth scan heights must match ray count");
    }
    for (double v : values) {
      if (is_return(v) && (v < min_range || v > max_range)) {
        throw std::invalid_argument("depth reading outside [min_range, max_range]");
      }
    }
  }
};

/// Heights that count as obstacles; returns outside the band are floor or ceiling.
struct HeightBand {
  double min_height = 0.15;
  double max_height = 1.8;
  bool contains(double h) const { return h >= min_height && h <= max_height; }
};

/// Obstacle and explored masks over one GridSpec. Cells outside the grid read
/// as free and unexplored.
struct ObstacleMap {
  ObstacleMap() = default;
  explicit ObstacleMap(const GridSpec& spec, std::size_t max_cells = kDefaultMaxCells)
      : obstacle(spec, 0, max_cells), explored(spec, 0, max_cells) {}

  const GridSpec& spec() const { return obstacle.spec(); }
  bool is_obstacle(Cell c) const { return obstacle.get_or_fill(c) != 0; }
  bool is_explored(Cell c) const { return explored.get_or_fill(c) != 0; }

  std::size_t explored_count() const {
    std::size_t n = 0;
    for (auto v : explored.data()) n += v != 0;
    return n;
  }
  std::size_t obstacle_count() const {
    std::size_t n = 0;
    for (auto v : obstacle.data()) n += v != 0;
    return n;
  }

  void resize_to(const GridSpec& spec) {
    obstacle.resize_to(spec);
    explored.resize_to(spec);
  }
  bool grow_to_include(Point2 p) {
    const GridSpec next = vlfm::grow_to_include(spec(), p, obstacle.max_cells());
    if (next == spec()) return false;
    resize_to(next);
    return true;
  }

  friend bool operator==(const ObstacleMap&, const ObstacleMap&) = default;

  Grid<std::uint8_t> obstacle;
  Grid<std::uint8_t> explored;
};

struct MaskCell {
  Cell cell;
  double confidence = 0.0;
  friend bool operator==(const MaskCell&, const MaskCell&) = default;
};

/// Cells visible in the camera cone at `pose`, row-major, with per-cell confidence.
struct FovMask {
  std::vector<MaskCell> cells;
  Pose2D pose;
  GridSpec spec;

  bool empty() const { return cells.empty(); }
  std::size_t size() const { return cells.size(); }
  friend bool operator==(const FovMask&, const FovMask&) = default;
};

/// cos^2(theta / (hfov/2) * pi/2), evaluated as (1 + cos 2x) / 2 so that the
/// axis, quarter-FOV and edge values come out as exactly 1, 0.5 and 0.
inline double fov_confidence(double theta, double hfov) {
  const double half = hfov / 2.0;
  if (std::abs(theta) >= half) return 0.0;
  const double c = 0.5 * (1.0 + std::cos(theta / half * std::numbers::pi));
  return std::clamp(c, 0.0, 1.0);
}

inline std::vector<Point2> scan_to_points(const DepthScan& scan, const Pose2D& pose,
                                          const HeightBand& band = {}) {
  std::vector<Point2> points;
  points.reserve(scan.size());
  for (std::size_t k = 0; k < scan.size(); ++k) {
    const double r = scan.values[k];
    if (!DepthScan::is_return(r)) continue;
    if (!scan.heights.empty() && !band.contains(scan.heights[k])) continue;
    const double a = pose.heading() + scan.ray_angle(k);
    points.push_back({pose.x + r * std::cos(a), pose.y + r * std::sin(a)});
  }
  return points;
}

/// Marks the cell of every point as obstacle, growing the map first if needed.
/// Returns the newly marked cells, indexed in the final (post-growth) spec.
inline std::vector<Cell> update_obstacles(ObstacleMap& map, std::span<const Point2> points) {
  for (const Point2& p : points) map.grow_to_include(p);
  std::vector<Cell> marked;
  for (const Point2& p : points) {
    const Cell c = world_to_grid(p, map.spec());
    auto& v = map.obstacle[c];
    if (v == 0) {
      v = 1;
      marked.push_back(c);
    }
  }
  return marked;
}

namespace detail {

/// atan2 to within about 1e-5 rad; used only for conservative pre-filtering.
inline double approx_atan2(double y, double x) {
  const double ax = std::abs(x), ay = std::abs(y);
  const double big = std::max(ax, ay);
  if (big == 0.0) return 0.0;
  const double t = std::min(ax, ay) / big;
  const double t2 = t * t;
  double a = t * (0.99997726 + t2 * (-0.33262347 + t2 * (0.19354346 + t2 * (-0.11643287 + t2 * (0.05265332 + t2 * -0.01172120)))));
  if (ay > ax) a = std::numbers::pi / 2.0 - a;
  if (x < 0.0) a = std::numbers::pi - a;
  return y < 0.0 ? -a : a;
}

}  // namespace detail

/// Occlusion-clipped FOV cone. A cell is in the mask iff its centre lies within
/// the sensing range of the nearest ray, within hfov/2 of the optical axis, and
/// the segment from the pose to its centre crosses no obstacle cell of `map`
/// other than the cell itself. Only cells inside the map's grid are returned.
inline FovMask compute_fov_mask(const ObstacleMap& map, const Pose2D& pose, const DepthScan& scan) {
  FovMask mask;
  mask.pose = pose;
  mask.spec = map.spec();
  if (scan.values.empty()) return mask;
  const GridSpec& spec = map.spec();
  const double res = spec.resolution;
  const double half = scan.hfov / 2.0;
  const double max_range = scan.max_range;
  const double ray_step = scan.size() > 1 ? scan.hfov / static_cast<double>(scan.size() - 1) : 0.0;

  // No cell beyond the farthest clip distance can pass the depth test.
  double reach = 0.0;
  for (std::size_t k = 0; k < scan.size(); ++k) reach = std::max(reach, scan.clip_range(k));
  reach = std::min(reach + res, max_range);
  const double reach2 = reach * reach + 1e-9;
  const Point2 dir = pose.direction();
  const double cos_pre = std::cos(std::min(half + 1e-6, std::numbers::pi));

  // Bounding box of the view sector, padded by one cell.
  double bx0 = pose.x, bx1 = pose.x, by0 = pose.y, by1 = pose.y;
  auto extend = [&](double angle) {
    bx0 = std::min(bx0, pose.x + reach * std::cos(angle)), bx1 = std::max(bx1, pose.x + reach * std::cos(angle));
    by0 = std::min(by0, pose.y + reach * std::sin(angle)), by1 = std::max(by1, pose.y + reach * std::sin(angle));
  };
  extend(pose.heading() - half);
  extend(pose.heading() + half);
  for (int q = -4; q <= 4; ++q) {
    const double axis = q * std::numbers::pi / 2.0;
    if (std::abs(normalize_angle(axis - pose.heading())) <= half + 1e-9) extend(axis);
  }
  const Cell lo = spec.nearest_cell({bx0 - res, by0 - res});
  const Cell hi = spec.nearest_cell({bx1 + res, by1 + res});
  const int r0 = std::max(lo.row, 0), r1 = std::min(hi.row, spec.height - 1);
  const int c0 = std::max(lo.col, 0), c1 = std::min(hi.col, spec.width - 1);
  const Point2 origin_units = spec.to_grid_units(pose.position());

  // Largest clip distance over each ray and its two neighbours, so a cell can
  // be rejected from an approximate bearing before the exact one is computed.
  std::vector<double> window_clip(scan.size());
  for (std::size_t k = 0; k < scan.size(); ++k) {
    double m = scan.clip_range(k);
    if (k > 0) m = std::max(m, scan.clip_range(k - 1));
    if (k + 1 < scan.size()) m = std::max(m, scan.clip_range(k + 1));
    window_clip[k] = m + res + 1e-9;
  }

  // Angular shadow buckets: for every known obstacle in reach, the nearest
  // distance of its square, spread over the bearings the square subtends. A
  // cell nearer than every obstacle in its bucket cannot be occluded, so the
  // exact traversal is only needed for the rest.
  constexpr int kBuckets = 512;
  constexpr double kAngleEps = 1e-4;  // covers the approximate bearings
  const double lo_angle = -half - kAngleEps;
  const double bucket_width = (2.0 * half + 2.0 * kAngleEps) / kBuckets;
  std::array<double, kBuckets> shadow;
  shadow.fill(std::numeric_limits<double>::infinity());
  bool pose_in_obstacle = map.is_obstacle(spec.nearest_cell(pose.position()));
  for (int r = r0; r <= r1 && !pose_in_obstacle; ++r) {
    for (int c = c0; c <= c1; ++c) {
      if (!map.obstacle.data()[spec.index({r, c})]) continue;
      const double x0 = spec.origin.x + (c - 0.5) * res, x1 = x0 + res;
      const double y0 = spec.origin.y + (r - 0.5) * res, y1 = y0 + res;
      const double nx = std::clamp(pose.x, x0, x1) - pose.x, ny = std::clamp(pose.y, y0, y1) - pose.y;
      const double near = std::sqrt(nx * nx + ny * ny);
      if (near > reach) continue;
      if (near <= 0.0) {
        pose_in_obstacle = true;
        break;
      }
      double amin = std::numeric_limits<double>::infinity(), amax = -amin;
      for (const Point2 corner : {Point2{x0, y0}, Point2{x1, y0}, Point2{x0, y1}, Point2{x1, y1}}) {
        const double cx = corner.x - pose.x, cy = corner.y - pose.y;
        const double a = detail::approx_atan2(cy * dir.x - cx * dir.y, cx * dir.x + cy * dir.y);
        amin = std::min(amin, a), amax = std::max(amax, a);
      }
      // Squares straddling the rear seam would wrap; they cannot touch a cone
      // narrower than a half turn but are made to cover everything otherwise.
      if (amax - amin > std::numbers::pi) amin = -std::numbers::pi, amax = std::numbers::pi;
      const int b0 = std::max(0, static_cast<int>(std::floor((amin - kAngleEps - lo_angle) / bucket_width)));
      const int b1 = std::min(kBuckets - 1, static_cast<int>(std::floor((amax + kAngleEps - lo_angle) / bucket_width)));
      for (int b = b0; b <= b1; ++b) shadow[static_cast<std::size_t>(b)] = std::min(shadow[static_cast<std::size_t>(b)], near);
    }
  }

  // Column span of each row that can hold a centre inside the sector: the
  // reach circle intersected, for cones narrower than a half turn, with a
  // triangle enclosing the sector. Padded by a cell on both sides.
  const double cone = std::min(half + 1e-6, std::numbers::pi);
  const bool use_triangle = cone < std::numbers::pi / 2.0 - 1e-3;
  std::array<Point2, 3> tri{};
  if (use_triangle) {
    const double len = reach / std::cos(cone) + res;
    tri = {pose.position(), pose.position() + len * Point2{std::cos(pose.heading() - cone), std::sin(pose.heading() - cone)},
           pose.position() + len * Point2{std::cos(pose.heading() + cone), std::sin(pose.heading() + cone)}};
  }
  auto row_span = [&](double y, double& xlo, double& xhi) {
    const double dy = y - pose.y;
    if (dy * dy > reach2) return false;
    const double w = std::sqrt(reach2 - dy * dy);
    xlo = pose.x - w, xhi = pose.x + w;
    if (!use_triangle) return true;
    double tlo = std::numeric_limits<double>::infinity(), thi = -tlo;
    for (std::size_t e = 0; e < 3; ++e) {
      const Point2 a = tri[e], b = tri[(e + 1) % 3];
      if ((a.y - y) * (b.y - y) > 0.0) continue;
      if (a.y == b.y) {
        tlo = std::min({tlo, a.x, b.x}), thi = std::max({thi, a.x, b.x});
      } else {
        const double x = a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
        tlo = std::min(tlo, x), thi = std::max(thi, x);
      }
    }
    xlo = std::max(xlo, tlo), xhi = std::min(xhi, thi);
    return xlo <= xhi;
  };

  for (int r = r0; r <= r1; ++r) {
    double xlo = 0.0, xhi = 0.0;
    if (!row_span(spec.origin.y + r * res, xlo, xhi)) continue;
    const int cs = std::max(c0, static_cast<int>(std::floor((xlo - spec.origin.x) / res)) - 1);
    const int ce = std::min(c1, static_cast<int>(std::ceil((xhi - spec.origin.x) / res)) + 1);
    for (int c = cs; c <= ce; ++c) {
      const Cell cell{r, c};
      const Point2 centre = grid_to_world(cell, spec);
      const double dx = centre.x - pose.x, dy = centre.y - pose.y;
      const double d2 = dx * dx + dy * dy;
      if (d2 > reach2) continue;
      const double d = std::sqrt(d2);
      // Conservative pre-filter; the exact angle test follows.
      if (d > 0.0 && dx * dir.x + dy * dir.y < cos_pre * d) continue;
      if (d > max_range) continue;
      if (ray_step > 0.0 && d > 0.0) {
        const double approx = detail::approx_atan2(dy * dir.x - dx * dir.y, dx * dir.x + dy * dir.y);
        const double ka = std::clamp((approx + half) / ray_step + 0.5, 0.0, static_cast<double>(scan.size() - 1));
        if (d > window_clip[static_cast<std::size_t>(ka)]) continue;
      }
      const double theta = d > 0.0 ? normalize_angle(std::atan2(dy, dx) - pose.heading()) : 0.0;
      if (std::abs(theta) > half) continue;
      std::size_t k = 0;
      if (ray_step > 0.0) {
        k = static_cast<std::size_t>(std::lround((theta + half) / ray_step));
        k = std::min(k, scan.size() - 1);
      }
      if (d > scan.clip_range(k) + res) continue;
      // theta >= lo_angle here, so truncation is the floor.
      const int b = std::min(static_cast<int>((theta - lo_angle) / bucket_width), kBuckets - 1);
      if (!pose_in_obstacle && d < shadow[static_cast<std::size_t>(b)] - 1e-9) {
        mask.cells.push_back({cell, fov_confidence(theta, scan.hfov)});
        continue;
      }
      const bool visible = traverse_segment(origin_units, Point2{c + 0.5, r + 0.5}, [&](Cell v, double) {
        return v == cell || !map.is_obstacle(v);
      });
      if (!visible) continue;
      mask.cells.push_back({cell, fov_confidence(theta, scan.hfov)});
    }
  }
  return mask;
}

/// Marks every mask cell explored. Returns the newly explored cells.
inline std::vector<Cell> update_explored(ObstacleMap& map, const FovMask& mask) {
  if (mask.cells.empty()) return {};
  if (!(mask.spec == map.spec())) throw GridError("mask was computed against a different grid");
  std::vector<Cell> fresh;
  for (const MaskCell& m : mask.cells) {
    auto& v = map.explored[m.cell];
    if (v == 0) {
      v = 1;
      fresh.push_back(m.cell);
    }
  }
  return fresh;
}

}  // namespace vlfm
