#pragma once

// Supercover grid traversal. Works in continuous grid units where cell
// (r, c) covers [c, c+1) x [r, r+1); see GridSpec::to_grid_units.

#include <cmath>
#include <limits>

#include "vlfm/core_grid.hpp"

namespace vlfm {

/// Visits every cell touched by the segment a->b in order of entry. When the
/// segment passes through a lattice corner (within `tie_eps` in the segment
/// parameter) both side cells are visited before the diagonal one, so nothing
/// leaks between corner-touching cells.
///
/// `visit(Cell, double t_entry)` returns false to stop early; t is in [0, 1].
/// Returns false iff the visitor stopped the walk.
template <typename Visitor>
bool traverse_segment(Point2 a, Point2 b, Visitor&& visit, double tie_eps = 1e-9) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  int col = static_cast<int>(std::floor(a.x));
  int row = static_cast<int>(std::floor(a.y));
  const int end_col = static_cast<int>(std::floor(b.x));
  const int end_row = static_cast<int>(std::floor(b.y));
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const int step_c = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
  const int step_r = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
  const double delta_c = step_c != 0 ? 1.0 / std::abs(dx) : kInf;
  const double delta_r = step_r != 0 ? 1.0 / std::abs(dy) : kInf;
  double next_c = step_c > 0 ? (col + 1 - a.x) / dx : (step_c < 0 ? (a.x - col) / -dx : kInf);
  double next_r = step_r > 0 ? (row + 1 - a.y) / dy : (step_r < 0 ? (a.y - row) / -dy : kInf);

  if (!visit(Cell{row, col}, 0.0)) return false;
  // Bounded by the number of lattice lines crossed; guards against float drift.
  const long long max_steps = std::llabs(static_cast<long long>(end_col) - col) +
                              std::llabs(static_cast<long long>(end_row) - row) + 4;
  for (long long i = 0; i < max_steps; ++i) {
    if (col == end_col && row == end_row) break;
    if (next_c < next_r - tie_eps) {
      if (next_c > 1.0) break;
      col += step_c;
      if (!visit(Cell{row, col}, next_c)) return false;
      next_c += delta_c;
    } else if (next_r < next_c - tie_eps) {
      if (next_r > 1.0) break;
      row += step_r;
      if (!visit(Cell{row, col}, next_r)) return false;
      next_r += delta_r;
    } else {
      const double t = std::min(next_c, next_r);
      if (t > 1.0) break;
      if (!visit(Cell{row, col + step_c}, t)) return false;
      if (!visit(Cell{row + step_r, col}, t)) return false;
      col += step_c;
      row += step_r;
      if (!visit(Cell{row, col}, t)) return false;
      next_c += delta_c;
      next_r += delta_r;
    }
  }
  return true;
}

/// True if the segment from world point `from` to the centre of `target`
/// crosses no cell flagged by `blocked` other than `target` itself.
template <typename BlockedFn>
bool line_of_sight(const GridSpec& spec, Point2 from, Cell target, BlockedFn&& blocked) {
  const Point2 a = spec.to_grid_units(from);
  const Point2 b{target.col + 0.5, target.row + 0.5};
  return traverse_segment(a, b, [&](Cell c, double) { return c == target || !blocked(c); });
}

}  // namespace vlfm
