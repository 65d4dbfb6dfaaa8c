#pragma once

// One object-goal episode: sense, map, score, decide, move; repeated until
// stop or the step cap. Also replays logged action/score sequences.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "vlfm/core_grid.hpp"
#include "vlfm/export.hpp"
#include "vlfm/frontier.hpp"
#include "vlfm/io.hpp"
#include "vlfm/mapping.hpp"
#include "vlfm/policy.hpp"
#include "vlfm/scorer.hpp"
#include "vlfm/value_map.hpp"
#include "vlfm/world.hpp"

namespace vlfm {

inline constexpr int kMaxEpisodeSteps = 500;
inline constexpr double kSuccessRadius = 1.0;

struct EpisodeConfig {
  PolicyParams policy{};
  SensorParams sensor{};
  UpdateMethod method = UpdateMethod::WeightedAverage;
  HeightBand band{};
  double detection_range = 4.0;
  int max_steps = kMaxEpisodeSteps;
  double success_radius = kSuccessRadius;
  double initial_map_extent = 12.8;  // meters per side of the first agent grid
  int min_frontier_length = kDefaultMinFrontierLength;
  bool log_frontiers = true;
  bool log_frontier_cells = false;
  std::size_t max_map_cells = kDefaultMaxCells;
  /// Called with a message when the scorer fails and the fallback score is used.
  std::function<void(const std::string&)> warn = [](const std::string& m) { std::cerr << "warning: " << m << '\n'; };
};

enum class StopReason { Success, StoppedFar, NoFrontiers, Timeout };

inline std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::Success: return "success";
    case StopReason::StoppedFar: return "stopped_far";
    case StopReason::NoFrontiers: return "no_frontiers";
    case StopReason::Timeout: return "timeout";
  }
  return "?";
}

struct EpisodeResult {
  std::uint64_t episode_id = 0;
  std::string category;
  bool success = false;
  double agent_path_length = 0.0;
  double shortest_path_length = 0.0;
  double spl = 0.0;
  int steps = 0;
  StopReason stop_reason = StopReason::Timeout;
  double final_distance = 0.0;  // ground truth, meters to the nearest target cell
};

/// Success weighted by inverse path length for one episode.
inline double compute_spl(bool success, double shortest, double agent_path) {
  if (!success) return 0.0;
  const double denom = std::max(shortest, agent_path);
  return denom > 0.0 ? shortest / denom : 1.0;
}

inline nlohmann::json result_json(const EpisodeResult& r) {
  return nlohmann::json{{"type", "result"},
                        {"episode_id", r.episode_id},
                        {"category", r.category},
                        {"success", r.success},
                        {"agent_path_length", r.agent_path_length},
                        {"shortest_path_length", finite_or_null(r.shortest_path_length)},
                        {"spl", r.spl},
                        {"steps", r.steps},
                        {"stop_reason", to_string(r.stop_reason)},
                        {"final_distance", finite_or_null(r.final_distance)}};
}

/// A logged step to replay instead of consulting the controller and scorer.
struct ScriptedStep {
  Action action;
  double score;
};

class Episode {
 public:
  Episode(const World& world, EpisodeSpec spec, EpisodeConfig config, const SemanticScorer* scorer,
          std::uint64_t episode_id)
      : world_(world),
        spec_(std::move(spec)),
        config_(std::move(config)),
        scorer_(scorer),
        id_(episode_id),
        prompt_(build_prompt(spec_.category)),
        field_(make_target_field(world_, spec_.category)),
        controller_(config_.policy),
        tracker_(config_.min_frontier_length),
        pose_(spec_.start) {
    // Agent grid shares the world lattice so cells correspond one-to-one.
    GridSpec g;
    g.resolution = world_.spec().resolution;
    const int n = std::max(8, static_cast<int>(std::lround(config_.initial_map_extent / g.resolution)));
    g.width = g.height = n;
    const Cell sc = world_.spec().nearest_cell(pose_.position());
    const Point2 centre = grid_to_world(sc, world_.spec());
    g.origin = {centre.x - (n / 2) * g.resolution, centre.y - (n / 2) * g.resolution};
    obstacles_ = ObstacleMap(g, config_.max_map_cells);
    values_ = ValueMap(g, config_.max_map_cells);
    tracker_.rebuild(obstacles_);
    result_.episode_id = id_;
    result_.category = spec_.category;
    result_.shortest_path_length = field_.distance_at(pose_.position());
  }

  bool done() const { return done_; }
  int steps_taken() const { return step_; }
  const Pose2D& pose() const { return pose_; }
  const ObstacleMap& obstacle_map() const { return obstacles_; }
  const ValueMap& value_map() const { return values_; }
  const EpisodeResult& result() const { return result_; }
  const EpisodeSpec& spec() const { return spec_; }
  const TargetField& target_field() const { return field_; }

  nlohmann::json header_json() const {
    return nlohmann::json{{"type", "header"},
                          {"episode_id", id_},
                          {"world_seed", world_.seed},
                          {"category", spec_.category},
                          {"prompt", prompt_.text},
                          {"start", spec_.start},
                          {"method", to_string(config_.method)},
                          {"selection", config_.policy.selection == FrontierSelection::Value ? "value" : "nearest"}};
  }

  /// Advances one step. With `scripted`, the action and score come from it.
  void step(std::ostream* log = nullptr, const ScriptedStep* scripted = nullptr) {
    if (done_) return;
    const Pose2D pose = pose_;
    const DepthScan scan = render_depth(world_, pose, config_.sensor, static_cast<std::uint64_t>(step_));

    const bool resized = ensure_extent(pose, scan.max_range + 2.0 * obstacles_.spec().resolution);
    std::vector<Cell> changed = update_obstacles(obstacles_, scan_to_points(surface_scan(scan), pose, config_.band));
    const std::size_t new_obstacle_count = changed.size();
    const FovMask mask = compute_fov_mask(obstacles_, pose, scan);
    const std::vector<Cell> fresh = update_explored(obstacles_, mask);
    changed.insert(changed.end(), fresh.begin(), fresh.end());
    tracker_.update(obstacles_, changed);

    bool fallback = false;
    double score = 0.0;
    if (scripted != nullptr) {
      score = scripted->score;
    } else {
      ScorerObservation obs;
      obs.pose = pose;
      obs.mask = &mask;
      obs.step = static_cast<std::uint64_t>(step_);
      obs.stream = id_;
      obs.world = &field_;
      if (scorer_->needs_image()) obs.image = depth_image_png(scan);
      try {
        score = std::clamp(scorer_->score(obs, prompt_), 0.0, 1.0);
      } catch (const ScorerError& e) {
        fallback = true;
        score = 0.0;
        if (config_.warn) config_.warn(std::string("episode ") + std::to_string(id_) + " step " + std::to_string(step_) +
                                       ": " + e.what() + "; using score 0");
      }
    }
    apply_update(values_, mask, score, config_.method);

    const auto det = detect_target(world_, pose, spec_.category, config_.detection_range, config_.sensor.hfov);
    const std::vector<Frontier>& frontiers = tracker_.frontiers();

    Decision decision;
    if (scripted != nullptr) {
      decision.action = scripted->action;
      decision.phase = controller_.phase();
    } else {
      MapsView view{&obstacles_, &values_, std::span<const Cell>(changed.data(), new_obstacle_count), resized};
      std::optional<Sighting> sighting;
      if (det) sighting = Sighting{det->goal, det->distance};
      decision = controller_.next_action(view, frontiers, sighting, pose);
    }

    if (log != nullptr) {
      nlohmann::json rec{{"type", "step"},
                         {"step", step_},
                         {"pose", pose},
                         {"action", to_string(decision.action)},
                         {"phase", to_string(decision.phase.kind)},
                         {"score", score},
                         {"frontier_count", frontiers.size()},
                         {"selected_frontier_midpoint", decision.selected_midpoint
                                                            ? nlohmann::json(*decision.selected_midpoint)
                                                            : nlohmann::json(nullptr)}};
      if (fallback) rec["scorer_fallback"] = true;
      if (config_.log_frontiers) {
        auto arr = nlohmann::json::array();
        for (const Frontier& f : frontiers) arr.push_back(frontier_json(f, config_.log_frontier_cells));
        rec["frontiers"] = std::move(arr);
      }
      *log << rec.dump() << '\n';
    }

    ++step_;
    switch (decision.action) {
      case Action::MoveForward: {
        const double moved = move_forward(world_, pose_, kForwardStep);
        result_.agent_path_length += moved;
        controller_.notify_motion(moved);
        break;
      }
      case Action::TurnLeft: pose_.rotate(kTurnAngle); break;
      case Action::TurnRight: pose_.rotate(-kTurnAngle); break;
      case Action::LookUp:
      case Action::LookDown: break;
      case Action::Stop: finish(true, decision.no_frontiers); break;
    }
    if (!done_ && step_ >= config_.max_steps) finish(false, false);
    if (done_ && log != nullptr) *log << result_json(result_).dump() << '\n';
  }

  EpisodeResult run(std::ostream* log = nullptr) {
    if (log != nullptr && step_ == 0) *log << header_json().dump() << '\n';
    while (!done_) step(log);
    return result_;
  }

 private:
  /// Hit points sit on the obstacle surface; nudge them inside so they land
  /// in the obstacle cell rather than on its boundary.
  static DepthScan surface_scan(const DepthScan& scan) {
    DepthScan s = scan;
    for (double& v : s.values) {
      if (DepthScan::is_return(v)) v += 1e-4;
    }
    s.max_range = scan.max_range + 1e-4;
    return s;
  }

  bool ensure_extent(const Pose2D& pose, double radius) {
    GridSpec spec = obstacles_.spec();
    for (const Point2 corner : {Point2{pose.x - radius, pose.y - radius}, Point2{pose.x + radius, pose.y + radius}}) {
      spec = grow_to_include(spec, corner, config_.max_map_cells);
    }
    if (spec == obstacles_.spec()) return false;
    obstacles_.resize_to(spec);
    values_.resize_to(spec);
    return true;
  }

  void finish(bool stopped, bool no_frontiers) {
    done_ = true;
    result_.steps = step_;
    result_.final_distance = distance_to_category(world_, pose_.position(), spec_.category);
    result_.success = stopped && result_.final_distance <= config_.success_radius;
    if (result_.success) {
      result_.stop_reason = StopReason::Success;
    } else if (!stopped) {
      result_.stop_reason = StopReason::Timeout;
    } else {
      result_.stop_reason = no_frontiers ? StopReason::NoFrontiers : StopReason::StoppedFar;
    }
    result_.spl = compute_spl(result_.success, result_.shortest_path_length, result_.agent_path_length);
  }

  const World& world_;
  EpisodeSpec spec_;
  EpisodeConfig config_;
  const SemanticScorer* scorer_;
  std::uint64_t id_;
  Prompt prompt_;
  TargetField field_;
  Controller controller_;
  FrontierTracker tracker_;
  ObstacleMap obstacles_;
  ValueMap values_;
  Pose2D pose_;
  int step_ = 0;
  bool done_ = false;
  EpisodeResult result_;
};

inline EpisodeResult run_episode(const World& world, const EpisodeSpec& spec, const EpisodeConfig& config,
                                 const SemanticScorer& scorer, std::uint64_t episode_id = 0,
                                 std::ostream* log = nullptr) {
  Episode ep(world, spec, config, &scorer, episode_id);
  return ep.run(log);
}

}  // namespace vlfm
