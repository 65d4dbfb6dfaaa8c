#pragma once

// Suite execution: a pool of workers runs independent episodes, writes one
// JSONL log per episode and aggregates SR/SPL. Also the ablation report,
// paired bootstrap and log replay.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "vlfm/config.hpp"
#include "vlfm/episode.hpp"
#include "vlfm/export.hpp"
#include "vlfm/scorer.hpp"
#include "vlfm/world.hpp"

namespace vlfm {

struct SuiteResult {
  std::vector<EpisodeResult> episodes;  // sorted by episode id
  nlohmann::json summary;
  std::filesystem::path directory;  // empty when nothing was written
};

inline std::vector<double> spl_values(const SuiteResult& r) {
  std::vector<double> v;
  v.reserve(r.episodes.size());
  for (const auto& e : r.episodes) v.push_back(e.spl);
  return v;
}

/// SR and SPL as percentages. Sums run in episode-id order so an external
/// recomputation in the same order reproduces the values exactly.
inline nlohmann::json summarize(const std::vector<EpisodeResult>& results, const RunConfig& config) {
  double spl_sum = 0.0;
  int successes = 0;
  for (const auto& r : results) {
    spl_sum += r.spl;
    successes += r.success ? 1 : 0;
  }
  const double n = static_cast<double>(results.size());
  return nlohmann::json{{"sr", results.empty() ? 0.0 : 100.0 * successes / n},
                        {"spl_mean", results.empty() ? 0.0 : 100.0 * spl_sum / n},
                        {"episodes", results.size()},
                        {"successes", successes},
                        {"config_hash", config_hash(config)},
                        {"method", to_string(config.episode.method)},
                        {"selection", to_string(config.episode.policy.selection)},
                        {"scorer", config.scorer == ScorerKind::Oracle ? "oracle" : "remote"}};
}

inline std::vector<World> build_worlds(const RunConfig& config) {
  std::vector<World> worlds;
  worlds.reserve(config.world_seeds.size());
  for (std::uint64_t seed : config.world_seeds) {
    WorldParams p = config.world;
    p.seed = seed;
    worlds.push_back(generate_world(p));
  }
  return worlds;
}

inline std::string episode_log_name(std::uint64_t id) { return "episode_" + std::to_string(id) + ".jsonl"; }

inline void dump_episode_maps(const std::filesystem::path& dir, std::uint64_t id, const Episode& ep) {
  std::filesystem::create_directories(dir);
  const std::string stem = "episode_" + std::to_string(id);
  write_pgm(dir / (stem + "_occupancy.pgm"), ep.obstacle_map());
  write_value_dump(dir / (stem + "_values.f32"), ep.value_map());
  write_value_heatmap(dir / (stem + "_values.png"), ep.value_map());
}

/// Runs `config.episodes` episodes. Episode e uses world seed
/// world_seeds[e % n] and its start/category from sample_episode(world, e).
/// When `out_dir` is non-empty, logs go to out_dir/episodes and the summary
/// to out_dir/summary.json.
inline SuiteResult run_suite(const RunConfig& config, const SemanticScorer& scorer,
                             const std::filesystem::path& out_dir = {}) {
  validate(config);
  const std::vector<World> worlds = build_worlds(config);
  const bool write = !out_dir.empty();
  if (write) {
    std::filesystem::create_directories(out_dir / "episodes");
    if (config.dump_maps) std::filesystem::create_directories(out_dir / "maps");
  }

  const auto n = static_cast<std::size_t>(config.episodes);
  std::vector<EpisodeResult> results(n);
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto worker = [&] {
    for (;;) {
      const std::size_t e = next.fetch_add(1);
      if (e >= n) return;
      try {
        const World& world = worlds[e % worlds.size()];
        const EpisodeSpec spec = sample_episode(world, e);
        Episode ep(world, spec, config.episode, &scorer, e);
        if (write && config.write_logs) {
          std::ostringstream log;
          results[e] = ep.run(&log);
          std::ofstream os(out_dir / "episodes" / episode_log_name(e), std::ios::binary);
          os << log.str();
          if (!os) throw std::runtime_error("failed to write log for episode " + std::to_string(e));
        } else {
          results[e] = ep.run(nullptr);
        }
        if (write && config.dump_maps) dump_episode_maps(out_dir / "maps", e, ep);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(n);
      }
    }
  };

  unsigned workers = config.workers > 0 ? static_cast<unsigned>(config.workers) : std::thread::hardware_concurrency();
  workers = std::clamp(workers, 1u, static_cast<unsigned>(n));
  {
    std::vector<std::jthread> pool;
    for (unsigned i = 1; i < workers; ++i) pool.emplace_back(worker);
    worker();
  }
  if (first_error) std::rethrow_exception(first_error);

  SuiteResult out;
  out.episodes = std::move(results);
  out.summary = summarize(out.episodes, config);
  if (write) {
    write_json_file(out_dir / "summary.json", out.summary);
    write_json_file(out_dir / "config.json", to_json(config));
    out.directory = out_dir;
  }
  return out;
}

struct BootstrapResult {
  double mean_diff = 0.0;
  double lower = 0.0;  // 2.5th percentile
  double upper = 0.0;  // 97.5th percentile
  bool positive() const { return lower > 0.0; }
};

/// Paired bootstrap of mean(a - b), resampling episode indices.
inline BootstrapResult paired_bootstrap(const std::vector<double>& a, const std::vector<double>& b,
                                        int resamples = 10000, std::uint64_t seed = 0) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("paired bootstrap needs equal non-empty samples");
  const std::size_t n = a.size();
  std::vector<double> d(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = a[i] - b[i];
    total += d[i];
  }
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<double> means(static_cast<std::size_t>(resamples));
  for (auto& m : means) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += d[pick(gen)];
    m = s / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(means.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, means.size() - 1);
    return means[lo] + (pos - static_cast<double>(lo)) * (means[hi] - means[lo]);
  };
  return {total / static_cast<double>(n), quantile(0.025), quantile(0.975)};
}

inline nlohmann::json bootstrap_json(const BootstrapResult& b) {
  return nlohmann::json{{"mean_diff", b.mean_diff}, {"ci95", {b.lower, b.upper}}, {"positive_at_95", b.positive()}};
}

struct AblationReport {
  std::map<std::string, SuiteResult> runs;  // keyed by method or "nearest"
  nlohmann::json report;
};

/// Runs the three update methods with value-guided selection, plus the
/// weighted method with nearest-frontier selection, over the same episodes.
inline AblationReport run_ablation(const RunConfig& base, const SemanticScorer& scorer,
                                   const std::filesystem::path& out_dir = {}, bool include_greedy = true) {
  AblationReport rep;
  auto run_variant = [&](const std::string& name, UpdateMethod m, FrontierSelection s) {
    RunConfig c = base;
    c.episode.method = m;
    c.episode.policy.selection = s;
    rep.runs.emplace(name, run_suite(c, scorer, out_dir.empty() ? out_dir : out_dir / name));
  };
  run_variant("replacement", UpdateMethod::Replacement, FrontierSelection::Value);
  run_variant("unweighted", UpdateMethod::UnweightedAverage, FrontierSelection::Value);
  run_variant("weighted", UpdateMethod::WeightedAverage, FrontierSelection::Value);
  if (include_greedy) run_variant("nearest", UpdateMethod::WeightedAverage, FrontierSelection::Nearest);

  nlohmann::json j;
  j["config_hash"] = config_hash(base);
  for (const auto& [name, r] : rep.runs) j["summaries"][name] = r.summary;
  const auto w = spl_values(rep.runs.at("weighted"));
  const auto u = spl_values(rep.runs.at("unweighted"));
  const auto r = spl_values(rep.runs.at("replacement"));
  j["bootstrap"]["weighted_minus_replacement"] = bootstrap_json(paired_bootstrap(w, r));
  j["bootstrap"]["weighted_minus_unweighted"] = bootstrap_json(paired_bootstrap(w, u));
  j["bootstrap"]["unweighted_minus_replacement"] = bootstrap_json(paired_bootstrap(u, r));
  const double sw = rep.runs.at("weighted").summary["spl_mean"].get<double>();
  const double su = rep.runs.at("unweighted").summary["spl_mean"].get<double>();
  const double sr = rep.runs.at("replacement").summary["spl_mean"].get<double>();
  j["ordering_holds"] = sw >= su && su >= sr;
  if (include_greedy) {
    const auto g = spl_values(rep.runs.at("nearest"));
    j["bootstrap"]["value_minus_nearest"] = bootstrap_json(paired_bootstrap(w, g));
  }
  rep.report = j;
  if (!out_dir.empty()) write_json_file(out_dir / "ablation.json", j);
  return rep;
}

struct ReplayResult {
  std::unique_ptr<World> world;  // set when the world was regenerated
  std::unique_ptr<Episode> episode;
  int steps = 0;
  bool poses_match = true;  // every logged pose equals the re-simulated one
};

/// Re-simulates an episode from its JSONL log: the world comes from
/// `config` and the header's world seed, actions and scores from the steps.
inline ReplayResult replay_log(std::istream& log, const RunConfig& config, const World* world_override = nullptr) {
  std::string line;
  if (!std::getline(log, line)) throw std::runtime_error("empty log");
  const auto header = nlohmann::json::parse(line);
  if (header.value("type", "") != "header") throw std::runtime_error("log does not start with a header record");

  ReplayResult out;
  const World* world = world_override;
  if (world == nullptr) {
    WorldParams p = config.world;
    p.seed = header.at("world_seed").get<std::uint64_t>();
    out.world = std::make_unique<World>(generate_world(p));
    world = out.world.get();
  }
  EpisodeSpec spec{header.at("start").get<Pose2D>(), header.at("category").get<std::string>()};
  EpisodeConfig ec = config.episode;
  ec.method = parse_update_method(header.at("method").get<std::string>());
  out.episode = std::make_unique<Episode>(*world, spec, ec, nullptr, header.at("episode_id").get<std::uint64_t>());
  while (std::getline(log, line)) {
    if (line.empty()) continue;
    const auto rec = nlohmann::json::parse(line);
    if (rec.value("type", "") != "step") continue;
    const Pose2D logged = rec.at("pose").get<Pose2D>();
    const Pose2D& now = out.episode->pose();
    if (std::abs(logged.x - now.x) > 1e-9 || std::abs(logged.y - now.y) > 1e-9 ||
        std::abs(normalize_angle(logged.heading() - now.heading())) > 1e-9) {
      out.poses_match = false;
    }
    const ScriptedStep s{parse_action(rec.at("action").get<std::string>()), rec.at("score").get<double>()};
    out.episode->step(nullptr, &s);
    ++out.steps;
    if (out.episode->done()) break;
  }
  return out;
}

}  // namespace vlfm
