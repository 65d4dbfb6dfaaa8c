// vlfm: run object-goal navigation suites, the update-method ablation, map
// exports and log replays from the command line.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error,
// 3 remote scorer unreachable at startup.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vlfm/config.hpp"
#include "vlfm/export.hpp"
#include "vlfm/suite.hpp"

namespace fs = std::filesystem;
using namespace vlfm;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitScorerDown = 3;

/// "7", "0..9" (inclusive) or "1,4,9".
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw ConfigError("bad seed '" + s + "' in '" + text + "'");
    return static_cast<std::uint64_t>(v);
  };
  if (const auto dots = text.find(".."); dots != std::string::npos) {
    const auto lo = number(text.substr(0, dots));
    const auto hi = number(text.substr(dots + 2));
    if (hi < lo) throw ConfigError("empty seed range '" + text + "'");
    if (hi - lo >= 100000) throw ConfigError("seed range '" + text + "' is too large");
    for (auto s = lo; s <= hi; ++s) out.push_back(s);
    return out;
  }
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(number(detail::trim(part)));
  if (out.empty()) throw ConfigError("no seeds in '" + text + "'");
  return out;
}

/// Flags shared by every subcommand that builds a RunConfig. Unset options
/// leave the config file (or default) value untouched.
struct CommonOptions {
  std::string config_path;
  std::optional<int> episodes;
  std::optional<std::string> seeds;
  std::optional<std::string> method;
  std::optional<std::string> selection;
  std::optional<std::string> scorer;
  std::optional<std::string> endpoint;
  std::optional<long long> timeout_ms;
  std::optional<int> max_retries;
  std::optional<double> lambda;
  std::optional<double> sigma;
  std::optional<std::uint64_t> scorer_seed;
  std::optional<std::uint64_t> sensor_seed;
  std::optional<double> sensor_noise;
  std::optional<int> room_count;
  std::optional<double> clutter;
  std::optional<int> max_steps;
  std::optional<double> detection_range;
  std::optional<std::string> output;
  std::optional<int> workers;
  bool dump_maps = false;
  bool no_logs = false;

  void attach(CLI::App* app, bool suite_flags) {
    app->add_option("--config", config_path, "JSON or TOML run config; flags override it")->check(CLI::ExistingFile);
    app->add_option("--seed,--seeds", seeds, "world seeds: N, A..B or a comma list");
    app->add_option("--method", method, "value update: replacement | unweighted | weighted");
    app->add_option("--selection", selection, "frontier choice: value | nearest");
    app->add_option("--scorer", scorer, "oracle | remote");
    app->add_option("--endpoint", endpoint, "remote scorer base URL (env VLFM_SCORER_ENDPOINT wins)");
    app->add_option("--timeout-ms", timeout_ms, "remote scorer per-attempt timeout");
    app->add_option("--max-retries", max_retries, "remote scorer retries after the first attempt");
    app->add_option("--lambda", lambda, "oracle distance scale in meters");
    app->add_option("--sigma", sigma, "oracle noise standard deviation");
    app->add_option("--scorer-seed", scorer_seed, "oracle noise seed");
    app->add_option("--sensor-seed", sensor_seed, "depth noise seed");
    app->add_option("--sensor-noise", sensor_noise, "depth noise standard deviation in meters");
    app->add_option("--room-count", room_count, "rooms per world, 0 draws 4..8");
    app->add_option("--clutter", clutter, "clutter fraction per room");
    app->add_option("--max-steps", max_steps, "step cap per episode (at most 500)");
    app->add_option("--detection-range", detection_range, "target detection range in meters");
    app->add_option("--output", output, "output root directory");
    if (suite_flags) {
      app->add_option("--episodes", episodes, "number of episodes");
      app->add_option("--workers", workers, "worker threads, 0 = logical cores");
      app->add_flag("--dump-maps", dump_maps, "write occupancy PGM and value maps per episode");
      app->add_flag("--no-logs", no_logs, "skip per-episode JSONL logs");
    }
  }

  RunConfig build() const {
    RunConfig c;
    if (!config_path.empty()) apply_json(c, load_config_document(config_path));
    if (episodes) c.episodes = *episodes;
    if (seeds) c.world_seeds = parse_seeds(*seeds);
    if (method) c.episode.method = parse_update_method(*method);
    if (selection) c.episode.policy.selection = parse_selection(*selection);
    if (scorer) {
      if (*scorer == "oracle") c.scorer = ScorerKind::Oracle;
      else if (*scorer == "remote") c.scorer = ScorerKind::Remote;
      else throw ConfigError("unknown scorer: " + *scorer);
    }
    if (endpoint) c.remote.endpoint = *endpoint;
    if (timeout_ms) c.remote.timeout = std::chrono::milliseconds(*timeout_ms);
    if (max_retries) c.remote.max_retries = *max_retries;
    if (lambda) c.oracle.lambda = *lambda;
    if (sigma) c.oracle.sigma = *sigma;
    if (scorer_seed) c.oracle.seed = *scorer_seed;
    if (sensor_seed) c.episode.sensor.seed = *sensor_seed;
    if (sensor_noise) c.episode.sensor.noise_sigma = *sensor_noise;
    if (room_count) c.world.room_count = *room_count;
    if (clutter) c.world.clutter = *clutter;
    if (max_steps) c.episode.max_steps = *max_steps;
    if (detection_range) c.episode.detection_range = *detection_range;
    if (output) c.output_dir = *output;
    if (workers) c.workers = *workers;
    if (dump_maps) c.dump_maps = true;
    if (no_logs) c.write_logs = false;
    if (c.scorer == ScorerKind::Remote) c.remote.apply_env_overrides();
    validate(c);
    return c;
  }
};

/// Scorer for the config. A remote endpoint is probed once up front so a dead
/// service fails the run immediately instead of degrading every episode.
std::unique_ptr<SemanticScorer> make_scorer(const RunConfig& c) {
  if (c.scorer == ScorerKind::Oracle) return std::make_unique<OracleScorer>(c.oracle);
  auto remote = std::make_unique<RemoteScorer>(c.remote);
  if (!remote->probe()) {
    throw ScorerTransportError(c.remote.endpoint, "endpoint did not answer the startup probe", false);
  }
  return remote;
}

fs::path run_directory(const RunConfig& c, const std::string& kind) {
  return fs::path(c.output_dir) / (kind + "-" + config_hash(c));
}

int cmd_run(const CommonOptions& opt) {
  const RunConfig c = opt.build();
  const auto scorer = make_scorer(c);
  const fs::path dir = run_directory(c, "run");
  const SuiteResult r = run_suite(c, *scorer, dir);
  std::cout << r.summary.dump(2) << '\n';
  std::cerr << "wrote " << dir.string() << '\n';
  return 0;
}

int cmd_ablate(const CommonOptions& opt, bool with_nearest) {
  const RunConfig c = opt.build();
  const auto scorer = make_scorer(c);
  const fs::path dir = run_directory(c, "ablate");
  const AblationReport rep = run_ablation(c, *scorer, dir, with_nearest);
  std::cout << rep.report.dump(2) << '\n';
  std::cerr << "wrote " << dir.string() << '\n';
  return 0;
}

int cmd_export(const CommonOptions& opt, std::uint64_t episode_id) {
  RunConfig c = opt.build();
  const auto scorer = make_scorer(c);
  WorldParams p = c.world;
  p.seed = c.world_seeds[episode_id % c.world_seeds.size()];
  const World world = generate_world(p);
  const EpisodeSpec spec = sample_episode(world, episode_id);
  Episode ep(world, spec, c.episode, scorer.get(), episode_id);
  const EpisodeResult res = ep.run(nullptr);
  const fs::path dir = run_directory(c, "maps");
  dump_episode_maps(dir, episode_id, ep);
  std::cout << result_json(res).dump(2) << '\n';
  std::cerr << "wrote " << dir.string() << '\n';
  return 0;
}

int cmd_replay(const CommonOptions& opt, const std::string& log_path) {
  const RunConfig c = opt.build();
  std::ifstream in(log_path);
  if (!in) throw ConfigError("cannot open log " + log_path);
  const ReplayResult r = replay_log(in, c);
  const fs::path dir = fs::path(c.output_dir) / ("replay-" + fs::path(log_path).stem().string());
  dump_episode_maps(dir, r.episode->result().episode_id, *r.episode);
  nlohmann::json out{{"steps", r.steps}, {"poses_match", r.poses_match}, {"directory", dir.string()}};
  std::cout << out.dump(2) << '\n';
  return r.poses_match ? 0 : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vision-language frontier map: episodes, ablations, map exports"};
  app.require_subcommand(1);

  CommonOptions run_opt, ablate_opt, export_opt, replay_opt;
  auto* run = app.add_subcommand("run", "run a suite of episodes and write logs plus summary");
  run_opt.attach(run, true);

  auto* ablate = app.add_subcommand("ablate", "compare the three value update methods on the same episodes");
  ablate_opt.attach(ablate, true);
  bool skip_nearest = false;
  ablate->add_flag("--no-nearest", skip_nearest, "skip the nearest-frontier baseline");

  auto* exp = app.add_subcommand("export-maps", "run one episode and export its occupancy and value maps");
  export_opt.attach(exp, false);
  std::uint64_t export_episode = 0;
  exp->add_option("--episode", export_episode, "episode id");

  auto* replay = app.add_subcommand("replay", "re-simulate a JSONL episode log and re-render its maps");
  replay_opt.attach(replay, false);
  std::string log_path;
  replay->add_option("log", log_path, "episode JSONL log")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (run->parsed()) return cmd_run(run_opt);
    if (ablate->parsed()) return cmd_ablate(ablate_opt, !skip_nearest);
    if (exp->parsed()) return cmd_export(export_opt, export_episode);
    if (replay->parsed()) return cmd_replay(replay_opt, log_path);
  } catch (const ScorerTransportError& e) {
    std::cerr << "error: remote scorer unavailable: " << e.what() << '\n';
    return kExitScorerDown;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: invalid configuration: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
