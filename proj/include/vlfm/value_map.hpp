#pragma once

// Two-channel semantic value map: per-cell value and confidence, fused
// across overlapping observations.

#include <algorithm>
#include <stdexcept>
#include <string>
#include <string_view>

#include "vlfm/core_grid.hpp"
#include "vlfm/frontier.hpp"
#include "vlfm/mapping.hpp"

namespace vlfm {

class FusionError : public std::domain_error {
 public:
  FusionError() : std::domain_error("undefined fusion: both confidences are zero") {}
};

enum class UpdateMethod { Replacement, UnweightedAverage, WeightedAverage };

inline std::string_view to_string(UpdateMethod m) {
  switch (m) {
    case UpdateMethod::Replacement: return "replacement";
    case UpdateMethod::UnweightedAverage: return "unweighted";
    case UpdateMethod::WeightedAverage: return "weighted";
  }
  return "?";
}

inline UpdateMethod parse_update_method(std::string_view s) {
  if (s == "replacement") return UpdateMethod::Replacement;
  if (s == "unweighted") return UpdateMethod::UnweightedAverage;
  if (s == "weighted") return UpdateMethod::WeightedAverage;
  throw std::invalid_argument("unknown update method: " + std::string(s));
}

/// Confidence-weighted mean of the current and previous values.
inline double fuse_value(double v_curr, double v_prev, double c_curr, double c_prev) {
  const double w = c_curr + c_prev;
  if (!(w > 0.0)) throw FusionError();
  return (c_curr * v_curr + c_prev * v_prev) / w;
}

/// Weighted mean of the two confidences, biased towards the larger one.
inline double fuse_confidence(double c_curr, double c_prev) {
  const double w = c_curr + c_prev;
  if (!(w > 0.0)) throw FusionError();
  // Equal inputs are a fixed point; the quotient below can round off it.
  if (c_curr == c_prev) return c_curr;
  return (c_curr * c_curr + c_prev * c_prev) / w;
}

struct ValueMap {
  ValueMap() = default;
  explicit ValueMap(const GridSpec& spec, std::size_t max_cells = kDefaultMaxCells)
      : value(spec, 0.0, max_cells), confidence(spec, 0.0, max_cells) {}

  const GridSpec& spec() const { return value.spec(); }
  void resize_to(const GridSpec& spec) {
    value.resize_to(spec);
    confidence.resize_to(spec);
  }
  bool seen(Cell c) const { return confidence.get_or_fill(c) > 0.0; }

  friend bool operator==(const ValueMap&, const ValueMap&) = default;

  Grid<double> value;
  Grid<double> confidence;
};

/// Writes `score` into every mask cell. Cells never seen before take the score
/// and the mask confidence directly; others are combined according to `method`.
inline void apply_update(ValueMap& map, const FovMask& mask, double score, UpdateMethod method) {
  if (mask.cells.empty()) return;
  if (!(mask.spec == map.spec())) throw GridError("mask was computed against a different grid");
  const double s = std::clamp(score, 0.0, 1.0);
  for (const MaskCell& m : mask.cells) {
    double& v = map.value[m.cell];
    double& c = map.confidence[m.cell];
    if (c <= 0.0) {
      v = s;
      c = m.confidence;
      continue;
    }
    switch (method) {
      case UpdateMethod::WeightedAverage:
        v = fuse_value(s, v, m.confidence, c);
        c = fuse_confidence(m.confidence, c);
        break;
      case UpdateMethod::UnweightedAverage:
        v = fuse_value(s, v, 1.0, 1.0);
        c = std::max(c, m.confidence);
        break;
      case UpdateMethod::Replacement:
        v = s;
        c = m.confidence;
        break;
    }
  }
}

/// Highest value over the 3x3 neighbourhoods of the frontier's cells, counting
/// only cells that have been seen. Zero when none has.
inline double frontier_value(const ValueMap& map, const Frontier& f) {
  double best = 0.0;
  for (const Cell& fc : f.cells) {
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        const Cell c{fc.row + dr, fc.col + dc};
        if (!map.spec().contains(c) || !(map.confidence[c] > 0.0)) continue;
        best = std::max(best, map.value[c]);
      }
    }
  }
  return best;
}

}  // namespace vlfm
