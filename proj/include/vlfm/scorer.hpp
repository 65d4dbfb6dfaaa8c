#pragma once

// Semantic scoring of an observation against the target prompt. The
// interface stands in for an image-text similarity model.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vlfm/core_grid.hpp"
#include "vlfm/mapping.hpp"
#include "vlfm/rng.hpp"

namespace vlfm {

class ScorerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Prompt {
  std::string text;
  std::string target;
};

inline Prompt build_prompt(const std::string& target) {
  if (target.empty()) throw std::invalid_argument("prompt target must not be empty");
  return {"Seems like there is a " + target + " ahead.", target};
}

/// Ground-truth geodesic distance (meters) from each world cell to the nearest
/// cell of one target category. Infinite where unreachable.
struct TargetField {
  std::string category;
  Grid<double> distance;

  double distance_at(Point2 p) const {
    const Cell c = distance.spec().nearest_cell(p);
    return distance.contains(c) ? distance[c] : std::numeric_limits<double>::infinity();
  }
};

struct ScorerObservation {
  Pose2D pose;
  const FovMask* mask = nullptr;
  std::uint64_t step = 0;
  /// Noise stream, normally the episode id.
  std::uint64_t stream = 0;
  /// Encoded image for remote scoring.
  std::optional<std::vector<std::uint8_t>> image;
  /// Ground truth for oracle scoring.
  const TargetField* world = nullptr;
};

class SemanticScorer {
 public:
  virtual ~SemanticScorer() = default;
  /// Score in [0, 1]. Must be safe to call concurrently.
  virtual double score(const ScorerObservation& obs, const Prompt& prompt) const = 0;
  virtual std::string name() const = 0;
  /// True if observations must carry encoded image bytes.
  virtual bool needs_image() const { return false; }
};

struct OracleParams {
  double lambda = 5.0;  // meters
  double sigma = 0.1;
  std::uint64_t seed = 0;
};

/// exp(-d/lambda) plus keyed Gaussian noise, where d is the smallest geodesic
/// distance from any cell in view to the target.
inline double oracle_score(const ScorerObservation& obs, const Prompt& prompt, const OracleParams& params) {
  if (obs.world == nullptr) throw ScorerError("oracle scorer needs a world handle");
  if (obs.world->category != prompt.target) {
    throw ScorerError("world handle is for '" + obs.world->category + "', prompt asks for '" + prompt.target + "'");
  }
  double d_min = std::numeric_limits<double>::infinity();
  if (obs.mask != nullptr) {
    for (const MaskCell& m : obs.mask->cells) {
      d_min = std::min(d_min, obs.world->distance_at(grid_to_world(m.cell, obs.mask->spec)));
    }
  }
  const double signal = std::isfinite(d_min) ? std::exp(-d_min / params.lambda) : 0.0;
  const double noise = params.sigma > 0.0 ? params.sigma * counter_normal(mix_keys(params.seed, obs.stream), obs.step) : 0.0;
  return std::clamp(signal + noise, 0.0, 1.0);
}

class OracleScorer final : public SemanticScorer {
 public:
  explicit OracleScorer(OracleParams params = {}) : params_(params) {}
  double score(const ScorerObservation& obs, const Prompt& prompt) const override {
    return oracle_score(obs, prompt, params_);
  }
  std::string name() const override { return "oracle"; }
  const OracleParams& params() const { return params_; }

 private:
  OracleParams params_;
};

}  // namespace vlfm
