#pragma once

// Grid geometry shared by every map: world/grid transforms, poses and
// doubling growth of dense row-major grids.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace vlfm {

class GridError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when a grid would exceed its configured cell budget.
class CapacityError : public GridError {
 public:
  using GridError::GridError;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(const Point2&, const Point2&) = default;
};

inline double norm(Point2 p) { return std::hypot(p.x, p.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  if (a > -std::numbers::pi && a <= std::numbers::pi) return a;
  a = std::fmod(a, kTwoPi);
  if (a <= -std::numbers::pi) a += kTwoPi;
  if (a > std::numbers::pi) a -= kTwoPi;
  return a;
}

/// Agent pose. The heading is kept in (-pi, pi] by every mutator.
class Pose2D {
 public:
  Pose2D() = default;
  Pose2D(double x, double y, double heading) : x(x), y(y), heading_(normalize_angle(heading)) {}

  double heading() const { return heading_; }
  void set_heading(double h) { heading_ = normalize_angle(h); }
  void rotate(double delta) { heading_ = normalize_angle(heading_ + delta); }
  Point2 position() const { return {x, y}; }
  Point2 direction() const { return {std::cos(heading_), std::sin(heading_)}; }

  friend bool operator==(const Pose2D&, const Pose2D&) = default;

  double x = 0.0;
  double y = 0.0;

 private:
  double heading_ = 0.0;
};

struct Cell {
  int row = 0;
  int col = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

inline constexpr double kDefaultResolution = 0.1;
inline constexpr std::size_t kDefaultMaxCells = std::size_t{1} << 24;

/// Geometry of a dense grid. Cell (0,0) is centred on `origin`; rows run
/// along +y and columns along +x.
struct GridSpec {
  double resolution = kDefaultResolution;
  Point2 origin{};
  int width = 1;
  int height = 1;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;

  std::size_t cell_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  bool contains(Cell c) const { return c.row >= 0 && c.col >= 0 && c.row < height && c.col < width; }
  std::size_t index(Cell c) const {
    return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(c.col);
  }
  Cell cell_at(std::size_t idx) const {
    return {static_cast<int>(idx / static_cast<std::size_t>(width)),
            static_cast<int>(idx % static_cast<std::size_t>(width))};
  }

  /// Cell whose centre is nearest to p, rounding half up. No bounds check.
  Cell nearest_cell(Point2 p) const {
    return {static_cast<int>(std::floor((p.y - origin.y) / resolution + 0.5)),
            static_cast<int>(std::floor((p.x - origin.x) / resolution + 0.5))};
  }
  bool contains(Point2 p) const { return contains(nearest_cell(p)); }

  /// Continuous grid coordinates: cell (r,c) covers [c, c+1) x [r, r+1).
  Point2 to_grid_units(Point2 p) const {
    return {(p.x - origin.x) / resolution + 0.5, (p.y - origin.y) / resolution + 0.5};
  }
};

inline void validate(const GridSpec& spec, std::size_t max_cells = kDefaultMaxCells) {
  if (!(spec.resolution > 0.0) || !std::isfinite(spec.resolution)) {
    throw GridError("grid resolution must be positive");
  }
  if (spec.width <= 0 || spec.height <= 0) throw GridError("grid dimensions must be positive");
  if (spec.cell_count() > max_cells) {
    throw CapacityError("grid of " + std::to_string(spec.width) + "x" + std::to_string(spec.height) +
                        " cells exceeds capacity of " + std::to_string(max_cells));
  }
}

inline Cell world_to_grid(Point2 p, const GridSpec& spec) {
  const Cell c = spec.nearest_cell(p);
  if (!spec.contains(c)) {
    throw GridError("outside grid: (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")");
  }
  return c;
}

inline Point2 grid_to_world(Cell c, const GridSpec& spec) {
  return {spec.origin.x + c.col * spec.resolution, spec.origin.y + c.row * spec.resolution};
}

/// Smallest doubling-per-axis enlargement of `spec` that contains p. Cell
/// (r,c) of the old grid maps to (r + dr, c + dc) of the new one, where
/// (dr, dc) is given by cell_offset().
inline GridSpec grow_to_include(const GridSpec& spec, Point2 p,
                                std::size_t max_cells = kDefaultMaxCells) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw GridError("cannot grow to a non-finite point");
  const Cell c = spec.nearest_cell(p);
  if (spec.contains(c)) return spec;

  auto grow_axis = [](int idx, int extent, long long& prepend, long long& size) {
    prepend = 0;
    size = extent;
    while (idx + prepend < 0 || idx + prepend >= size) {
      if (idx + prepend < 0) prepend += size;
      size *= 2;
      if (size > (1LL << 40)) break;
    }
  };
  long long pre_cols = 0, cols = 0, pre_rows = 0, rows = 0;
  grow_axis(c.col, spec.width, pre_cols, cols);
  grow_axis(c.row, spec.height, pre_rows, rows);
  if (static_cast<double>(cols) * static_cast<double>(rows) > static_cast<double>(max_cells)) {
    throw CapacityError("growing grid to " + std::to_string(cols) + "x" + std::to_string(rows) +
                        " cells exceeds capacity of " + std::to_string(max_cells));
  }
  GridSpec out = spec;
  out.width = static_cast<int>(cols);
  out.height = static_cast<int>(rows);
  out.origin.x = spec.origin.x - static_cast<double>(pre_cols) * spec.resolution;
  out.origin.y = spec.origin.y - static_cast<double>(pre_rows) * spec.resolution;
  return out;
}

/// Integer re-indexing offset from `from` to `to`, which must share a lattice.
inline Cell cell_offset(const GridSpec& from, const GridSpec& to) {
  return {static_cast<int>(std::lround((from.origin.y - to.origin.y) / from.resolution)),
          static_cast<int>(std::lround((from.origin.x - to.origin.x) / from.resolution))};
}

/// Dense row-major grid of T with doubling growth.
template <typename T>
class Grid {
 public:
  Grid() : Grid(GridSpec{}) {}
  explicit Grid(const GridSpec& spec, T fill = T{}, std::size_t max_cells = kDefaultMaxCells)
      : spec_(spec), fill_(fill), max_cells_(max_cells) {
    validate(spec_, max_cells_);
    data_.assign(spec_.cell_count(), fill_);
  }

  const GridSpec& spec() const { return spec_; }
  std::size_t max_cells() const { return max_cells_; }
  int width() const { return spec_.width; }
  int height() const { return spec_.height; }
  std::size_t size() const { return data_.size(); }

  bool contains(Cell c) const { return spec_.contains(c); }
  T& operator[](Cell c) { return data_[spec_.index(c)]; }
  const T& operator[](Cell c) const { return data_[spec_.index(c)]; }
  T& at(Cell c) {
    if (!contains(c)) throw GridError("cell out of range");
    return (*this)[c];
  }
  const T& at(Cell c) const {
    if (!contains(c)) throw GridError("cell out of range");
    return (*this)[c];
  }
  /// Value at c, or the fill value outside the grid.
  T get_or_fill(Cell c) const { return contains(c) ? (*this)[c] : fill_; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  /// Re-index contents into `bigger`, which must contain the current extent.
  void resize_to(const GridSpec& bigger) {
    if (bigger == spec_) return;
    validate(bigger, max_cells_);
    const Cell off = cell_offset(spec_, bigger);
    if (off.row < 0 || off.col < 0 || off.row + spec_.height > bigger.height ||
        off.col + spec_.width > bigger.width) {
      throw GridError("resize_to target does not contain the current grid");
    }
    std::vector<T> next(bigger.cell_count(), fill_);
    for (int r = 0; r < spec_.height; ++r) {
      const auto src = data_.begin() + static_cast<std::ptrdiff_t>(spec_.index({r, 0}));
      const auto dst = next.begin() + static_cast<std::ptrdiff_t>(bigger.index({r + off.row, off.col}));
      std::copy(src, src + spec_.width, dst);
    }
    data_ = std::move(next);
    spec_ = bigger;
  }

  /// Grows (doubling per axis) until p is inside. Returns true if resized.
  bool grow_to_include(Point2 p) {
    const GridSpec next = vlfm::grow_to_include(spec_, p, max_cells_);
    if (next == spec_) return false;
    resize_to(next);
    return true;
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  GridSpec spec_;
  T fill_{};
  std::size_t max_cells_ = kDefaultMaxCells;
  std::vector<T> data_;
};

inline constexpr int kNeighbors4[4][2] = {{-1, 0}, {0, -1}, {0, 1}, {1, 0}};
inline constexpr int kNeighbors8[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1},
                                          {0, 1},   {1, -1}, {1, 0},  {1, 1}};

inline bool adjacent8(Cell a, Cell b) {
  return a != b && std::abs(a.row - b.row) <= 1 && std::abs(a.col - b.col) <= 1;
}

}  // namespace vlfm
