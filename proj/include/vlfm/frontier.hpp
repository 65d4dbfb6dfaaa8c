#pragma once

// Frontier extraction: boundary cells between explored free space and
// unexplored space, grouped into simple 8-connected chains.

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "vlfm/core_grid.hpp"
#include "vlfm/mapping.hpp"

namespace vlfm {

inline constexpr int kDefaultMinFrontierLength = 3;

struct Frontier {
  std::vector<Cell> cells;  // ordered chain, consecutive cells 8-adjacent
  Cell midpoint_cell;
  Point2 midpoint;

  std::size_t length_cells() const { return cells.size(); }
  friend bool operator==(const Frontier&, const Frontier&) = default;
};

/// Explored, free, and 4-adjacent to an in-grid unexplored cell.
inline bool is_frontier_cell(const ObstacleMap& map, Cell c) {
  if (!map.spec().contains(c) || !map.is_explored(c) || map.is_obstacle(c)) return false;
  for (const auto& d : kNeighbors4) {
    const Cell n{c.row + d[0], c.col + d[1]};
    if (map.spec().contains(n) && !map.is_explored(n)) return true;
  }
  return false;
}

namespace detail {

/// Splits one 8-connected component into simple chains. Each chain starts at
/// the remaining cell with the fewest remaining neighbours (row-major on ties)
/// and greedily extends to the neighbour with the fewest remaining neighbours,
/// preferring 4-adjacent steps, then row-major order. Branches left behind at
/// junctions become chains of their own.
inline std::vector<std::vector<Cell>> split_into_chains(std::vector<Cell> component) {
  std::sort(component.begin(), component.end());
  int rmin = component.front().row, rmax = rmin, cmin = component.front().col, cmax = cmin;
  for (const Cell& c : component) {
    rmin = std::min(rmin, c.row), rmax = std::max(rmax, c.row);
    cmin = std::min(cmin, c.col), cmax = std::max(cmax, c.col);
  }
  const int w = cmax - cmin + 3, h = rmax - rmin + 3;
  const std::size_t slots = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  std::vector<std::uint8_t> remaining(slots, 0);
  std::vector<std::uint8_t> degree(slots, 0);  // remaining 8-neighbours
  auto at = [&](Cell c) {
    return static_cast<std::size_t>(c.row - rmin + 1) * static_cast<std::size_t>(w) + static_cast<std::size_t>(c.col - cmin + 1);
  };
  for (const Cell& c : component) remaining[at(c)] = 1;
  for (const Cell& c : component) {
    for (const auto& d : kNeighbors8) degree[at(c)] += remaining[at({c.row + d[0], c.col + d[1]})];
  }
  auto take = [&](Cell c) {
    remaining[at(c)] = 0;
    for (const auto& d : kNeighbors8) --degree[at({c.row + d[0], c.col + d[1]})];
  };

  std::vector<std::vector<Cell>> chains;
  std::size_t left = component.size();
  while (left > 0) {
    Cell start{};
    int best = 9;
    for (const Cell& c : component) {
      if (!remaining[at(c)]) continue;
      if (degree[at(c)] < best) best = degree[at(c)], start = c;
    }
    std::vector<Cell> chain{start};
    take(start);
    --left;
    Cell cur = start;
    for (;;) {
      bool found = false;
      Cell next{};
      int next_deg = 9;
      bool next_diag = true;
      for (const auto& d : kNeighbors8) {
        const Cell n{cur.row + d[0], cur.col + d[1]};
        if (!remaining[at(n)]) continue;
        const int deg = degree[at(n)];
        const bool diag = d[0] != 0 && d[1] != 0;
        if (!found || deg < next_deg || (deg == next_deg && !diag && next_diag)) {
          found = true, next = n, next_deg = deg, next_diag = diag;
        }
      }
      if (!found) break;
      chain.push_back(next);
      take(next);
      --left;
      cur = next;
    }
    chains.push_back(std::move(chain));
  }
  return chains;
}

}  // namespace detail

/// Groups frontier cells (any order, no duplicates) into chains of at least
/// `min_length` cells, ordered row-major by each chain's smallest cell.
inline std::vector<Frontier> frontiers_from_cells(const GridSpec& spec, std::span<const Cell> frontier_cells,
                                                  int min_length = kDefaultMinFrontierLength) {
  std::vector<Frontier> out;
  if (frontier_cells.empty()) return out;
  int rmin = frontier_cells.front().row, rmax = rmin, cmin = frontier_cells.front().col, cmax = cmin;
  for (const Cell& c : frontier_cells) {
    rmin = std::min(rmin, c.row), rmax = std::max(rmax, c.row);
    cmin = std::min(cmin, c.col), cmax = std::max(cmax, c.col);
  }
  const int w = cmax - cmin + 3, h = rmax - rmin + 3;
  std::vector<std::uint8_t> pending(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0);
  auto slot = [&](Cell c) -> std::uint8_t& {
    return pending[static_cast<std::size_t>(c.row - rmin + 1) * static_cast<std::size_t>(w) +
                   static_cast<std::size_t>(c.col - cmin + 1)];
  };
  for (const Cell& c : frontier_cells) slot(c) = 1;

  std::vector<Cell> component;
  std::vector<Cell> stack;
  for (const Cell& seed : frontier_cells) {
    if (!slot(seed)) continue;
    component.clear();
    stack.push_back(seed);
    slot(seed) = 0;
    while (!stack.empty()) {
      const Cell c = stack.back();
      stack.pop_back();
      component.push_back(c);
      for (const auto& d : kNeighbors8) {
        const Cell n{c.row + d[0], c.col + d[1]};
        if (!slot(n)) continue;
        slot(n) = 0;
        stack.push_back(n);
      }
    }
    for (auto& chain : detail::split_into_chains(component)) {
      if (static_cast<int>(chain.size()) < min_length) continue;
      Frontier f;
      f.midpoint_cell = chain[chain.size() / 2];
      f.midpoint = grid_to_world(f.midpoint_cell, spec);
      f.cells = std::move(chain);
      out.push_back(std::move(f));
    }
  }
  std::vector<std::pair<Cell, std::size_t>> keys;
  keys.reserve(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) keys.push_back({*std::min_element(out[i].cells.begin(), out[i].cells.end()), i});
  std::sort(keys.begin(), keys.end());
  std::vector<Frontier> sorted;
  sorted.reserve(out.size());
  for (const auto& k : keys) sorted.push_back(std::move(out[k.second]));
  return sorted;
}

inline std::vector<Frontier> extract_frontiers(const ObstacleMap& map, int min_length = kDefaultMinFrontierLength) {
  std::vector<Cell> cells;
  const GridSpec& spec = map.spec();
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      if (is_frontier_cell(map, {r, c})) cells.push_back({r, c});
    }
  }
  return frontiers_from_cells(spec, cells, min_length);
}

/// Incrementally maintained frontier-cell set. Feed it every cell whose
/// obstacle or explored flag changed; results equal extract_frontiers().
class FrontierTracker {
 public:
  explicit FrontierTracker(int min_length = kDefaultMinFrontierLength) : min_length_(min_length) {}

  /// Full rebuild, needed after the map grid has been resized.
  void rebuild(const ObstacleMap& map) {
    spec_ = map.spec();
    slot_.assign(spec_.cell_count(), kAbsent);
    cells_.clear();
    stale_ = true;
    for (int r = 0; r < spec_.height; ++r) {
      for (int c = 0; c < spec_.width; ++c) {
        if (is_frontier_cell(map, {r, c})) insert({r, c});
      }
    }
  }

  void update(const ObstacleMap& map, std::span<const Cell> changed) {
    if (!(map.spec() == spec_)) {
      rebuild(map);
      return;
    }
    auto refresh = [&](Cell c) {
      if (!spec_.contains(c)) return;
      if (is_frontier_cell(map, c)) {
        insert(c);
      } else {
        erase(c);
      }
    };
    for (const Cell& c : changed) {
      refresh(c);
      for (const auto& d : kNeighbors4) refresh({c.row + d[0], c.col + d[1]});
    }
  }

  /// Cached between calls while the frontier cell set is unchanged.
  const std::vector<Frontier>& frontiers() const {
    if (stale_) {
      cache_ = frontiers_from_cells(spec_, cells_, min_length_);
      stale_ = false;
    }
    return cache_;
  }
  std::size_t cell_count() const { return cells_.size(); }

 private:
  static constexpr std::uint32_t kAbsent = 0xffffffffu;

  void insert(Cell c) {
    std::uint32_t& s = slot_[spec_.index(c)];
    if (s != kAbsent) return;
    s = static_cast<std::uint32_t>(cells_.size());
    cells_.push_back(c);
    stale_ = true;
  }
  void erase(Cell c) {
    std::uint32_t& s = slot_[spec_.index(c)];
    if (s == kAbsent) return;
    const Cell last = cells_.back();
    cells_[s] = last;
    slot_[spec_.index(last)] = s;
    cells_.pop_back();
    s = kAbsent;
    stale_ = true;
  }

  int min_length_;
  GridSpec spec_{};
  std::vector<std::uint32_t> slot_;  // position in cells_, per grid cell
  std::vector<Cell> cells_;
  mutable std::vector<Frontier> cache_;
  mutable bool stale_ = true;
};

}  // namespace vlfm
