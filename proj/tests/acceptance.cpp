// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "stub_server.hpp"
#include "vlfm/remote_scorer.hpp"
#include "vlfm/suite.hpp"

using namespace vlfm;
namespace fs = std::filesystem;
using namespace std::chrono_literals;

namespace {

constexpr double kPi = std::numbers::pi;

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& why) {
    if (!ok) {
      if (!pass) detail << "; ";
      pass = false;
      detail << why;
    }
  }
};

int failures = 0;

void report(const std::string& name, const std::function<void(Verdict&)>& body) {
  Verdict v;
  const auto t0 = Clock::now();
  try {
    body(v);
  } catch (const std::exception& e) {
    v.require(false, std::string("exception: ") + e.what());
  }
  if (!v.pass) ++failures;
  std::printf("[PRIMARY] %-34s %s  (%.2fs) %s\n", name.c_str(), v.pass ? "PASS" : "FAIL", seconds_since(t0),
              v.detail.str().c_str());
  std::fflush(stdout);
}

void fusion(Verdict& v) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000000; ++i) {
    const double vc = u(rng), vp = u(rng), cc = u(rng), cp = u(rng);
    const long double lc = cc, lp = cp;
    const long double want_v = (lc * vc + lp * vp) / (lc + lp);
    const long double want_c = (lc * lc + lp * lp) / (lc + lp);
    const double gv = fuse_value(vc, vp, cc, cp), gc = fuse_confidence(cc, cp);
    worst = std::max({worst, static_cast<double>(std::abs(gv - want_v) / want_v),
                      static_cast<double>(std::abs(gc - want_c) / want_c)});
  }
  v.require(worst <= 1e-12, "worst relative error " + std::to_string(worst));
  v.require(fuse_confidence(0.5, 0.5) == 0.5 && fuse_confidence(1.0, 0.0) == 1.0, "confidence closed forms");
  v.require(fuse_value(0.6, 0.2, 0.8, 0.2) - 0.52 < 1e-15 && fuse_value(0.6, 0.2, 0.8, 0.2) - 0.52 > -1e-15,
            "value example");
  v.require(fov_confidence(0.0, 1.0) == 1.0 && fov_confidence(0.5, 1.0) == 0.0 && fov_confidence(0.25, 1.0) == 0.5,
            "fov confidence closed forms");
  bool threw = false;
  try {
    fuse_value(0.1, 0.2, 0.0, 0.0);
  } catch (const FusionError&) {
    threw = true;
  }
  v.require(threw, "zero confidences must raise");
  const double t = seconds_since(t0);
  v.require(t < 10.0, "took " + std::to_string(t) + " s");
  v.detail << "max rel err " << worst;
}

void frontiers(Verdict& v) {
  const auto t0 = Clock::now();
  int agree = 0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const ObstacleMap m = oracle::random_frontier_map(seed, 16);
    const auto got = extract_frontiers(m, 3);
    const auto want = oracle::brute_frontiers(m, 3);
    bool same = got.size() == want.size();
    for (std::size_t i = 0; same && i < got.size(); ++i) {
      same = got[i].cells == want[i].cells && got[i].midpoint_cell == want[i].midpoint;
    }
    agree += same;
  }
  const double t = seconds_since(t0);
  v.require(agree == 500, std::to_string(500 - agree) + " maps disagree");
  v.require(t < 5.0, "took " + std::to_string(t) + " s");
  v.detail << agree << "/500 maps agree";
}

void occlusion(Verdict& v) {
  long violations = 0, cells = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const ObstacleMap m = oracle::random_occlusion_map(seed + 50000);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.5, 5.8), h(-kPi, kPi);
    Pose2D pose;
    do {
      pose = Pose2D(u(rng), u(rng), h(rng));
    } while (m.is_obstacle(m.spec().nearest_cell(pose.position())));
    DepthScan scan;
    scan.values.assign(48, kNoReturn);
    const FovMask mask = compute_fov_mask(m, pose, scan);
    for (const auto& mc : mask.cells) {
      ++cells;
      const Point2 q = grid_to_world(mc.cell, m.spec());
      const double th = normalize_angle(std::atan2(q.y - pose.y, q.x - pose.x) - pose.heading());
      const bool ok = oracle::visible(m, pose.position(), mc.cell) && distance(q, pose.position()) <= scan.max_range + 1e-9 &&
                      std::abs(th) <= scan.hfov / 2 + 1e-9 && std::abs(mc.confidence - oracle::confidence(th, scan.hfov)) <= 1e-9;
      violations += !ok;
    }
  }
  v.require(violations == 0, std::to_string(violations) + " violations");
  v.detail << cells << " masked cells checked, " << violations << " violations";
}

RunConfig ablation_config() {
  RunConfig c;
  c.episodes = 500;
  c.world_seeds.clear();
  for (std::uint64_t s = 0; s < 10; ++s) c.world_seeds.push_back(s);
  c.oracle.lambda = 5.0;
  c.oracle.sigma = 0.1;
  c.episode.warn = nullptr;
  return c;
}

struct CraftedCorridor {
  World world;
  EpisodeSpec spec;
};

CraftedCorridor corridor(int start_col, int target_col, double heading) {
  std::vector<std::string> lines(5, std::string(50, '.'));
  for (int c = 0; c < 50; ++c) lines[0][c] = lines[4][c] = '#';
  for (int r = 0; r < 5; ++r) lines[r][0] = lines[r][49] = '#';
  for (int r = 1; r <= 3; ++r) lines[r][target_col] = 'b';
  lines[2][start_col] = 'S';
  CraftedCorridor out{world_from_ascii(lines, 0.1, {{'b', "bed"}}, heading), {}};
  out.spec = {out.world.start, "bed"};
  return out;
}

void episode_rules(Verdict& v, const AblationReport& rep) {
  long checked = 0, bad = 0;
  for (const auto& [name, run] : rep.runs) {
    for (const EpisodeResult& r : run.episodes) {
      ++checked;
      const bool ok = r.steps >= 1 && r.steps <= kMaxEpisodeSteps &&
                      (!r.success || (r.stop_reason == StopReason::Success && r.final_distance <= 1.0)) &&
                      (r.success || r.spl == 0.0);
      bad += !ok;
    }
  }
  v.require(bad == 0, std::to_string(bad) + " episodes break the step or success rules");

  EpisodeConfig cfg;
  cfg.warn = nullptr;
  const OracleScorer scorer;
  {
    // Scripted detour: shortest 2 m, walked 4 m.
    const CraftedCorridor cor = corridor(20, 40, kPi);
    Episode ep(cor.world, cor.spec, cfg, &scorer, 0);
    std::vector<Action> script(6, Action::MoveForward);
    script.insert(script.end(), 6, Action::TurnLeft);
    script.insert(script.end(), 10, Action::MoveForward);
    script.push_back(Action::Stop);
    for (Action a : script) {
      const ScriptedStep s{a, 0.5};
      ep.step(nullptr, &s);
    }
    v.require(ep.result().success && std::abs(ep.result().spl - 0.5) <= 1e-9,
              "detour SPL " + std::to_string(ep.result().spl));
  }
  {
    const CraftedCorridor cor = corridor(10, 15, 0.0);
    const EpisodeResult r = run_episode(cor.world, cor.spec, cfg, scorer);
    v.require(r.success && r.spl == 1.0 && r.steps == 1, "immediate stop SPL " + std::to_string(r.spl));
  }
  {
    const CraftedCorridor cor = corridor(10, 40, 0.0);
    Episode ep(cor.world, cor.spec, cfg, &scorer, 0);
    const ScriptedStep s{Action::Stop, 0.0};
    ep.step(nullptr, &s);
    v.require(!ep.result().success && ep.result().spl == 0.0, "far stop must score 0");
  }
  v.detail << checked << " ablation episodes checked, 3 crafted worlds";
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    files[fs::relative(e.path(), dir).string()] = ss.str();
  }
  return files;
}

void determinism_and_speed(Verdict& v) {
  const fs::path root = fs::temp_directory_path() / ("vlfm-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(root);
  RunConfig c;
  c.episodes = 12;
  c.world_seeds = {0, 1, 2};
  c.episode.warn = nullptr;
  const OracleScorer scorer;
  c.workers = 1;
  run_suite(c, scorer, root / "a");
  run_suite(c, scorer, root / "b");
  c.workers = 4;
  run_suite(c, scorer, root / "c");
  const auto a = snapshot(root / "a");
  v.require(a.size() == 14, "expected 12 logs plus summary and config");
  v.require(a == snapshot(root / "b"), "repeat run differs");
  v.require(a == snapshot(root / "c"), "4-worker run differs");
  fs::remove_all(root);

  // Full-length episodes on the default 256 x 256 world, timed without a log.
  RunConfig d;
  d.episode.warn = nullptr;
  double worst = 0.0;
  int timeouts = 0;
  for (std::uint64_t e : {60, 65, 72, 73, 80}) {
    WorldParams p = d.world;
    p.seed = e % 10;
    const World world = generate_world(p);
    const EpisodeSpec spec = sample_episode(world, e);
    double best = 1e9;
    int steps = 0;
    for (int rep = 0; rep < 5; ++rep) {
      const auto t0 = Clock::now();
      const EpisodeResult r = run_episode(world, spec, d.episode, scorer, e);
      best = std::min(best, seconds_since(t0));
      steps = r.steps;
    }
    timeouts += steps == kMaxEpisodeSteps;
    worst = std::max(worst, best * 500.0 / std::max(steps, 1));
  }
  v.require(worst < 0.1, "500-step episode took " + std::to_string(worst * 1000) + " ms");
  v.detail << "logs identical across repeats and worker counts; slowest 500-step episode " << worst * 1000 << " ms ("
           << timeouts << "/5 ran the full 500 steps)";
}

void remote_service(Verdict& v) {
  stub::ScoreServer ok(stub::ScoreServer::reply(200, R"({"score": 0.42})"));
  RemoteScorerConfig rc;
  rc.endpoint = ok.endpoint();
  rc.timeout = 1000ms;
  rc.max_retries = 0;
  const RemoteScorer scorer(rc);
  std::vector<std::uint8_t> image(777);
  for (std::size_t i = 0; i < image.size(); ++i) image[i] = static_cast<std::uint8_t>(i * 13);
  ScorerObservation obs;
  obs.image = image;
  const double s = scorer.score(obs, build_prompt("couch"));
  v.require(s == 0.42, "score " + std::to_string(s));
  const auto bodies = ok.bodies();
  v.require(bodies.size() == 1, "expected one request");
  if (bodies.size() == 1) {
    const auto body = nlohmann::json::parse(bodies[0]);
    v.require(body.size() == 2 && body.at("prompt") == "Seems like there is a couch ahead." &&
                  stub::base64_decode(body.at("image_b64").get<std::string>()) == image,
              "request body mismatch");
  }

  stub::ScoreServer stalled(stub::ScoreServer::stall(700ms));
  rc.endpoint = stalled.endpoint();
  rc.timeout = 150ms;
  rc.max_retries = 2;
  rc.backoff_initial = 10ms;
  const auto t0 = Clock::now();
  bool raised = false;
  try {
    RemoteScorer(rc).score(obs, build_prompt("couch"));
  } catch (const ScorerTransportError&) {
    raised = true;
  }
  const double took = seconds_since(t0);
  v.require(raised, "stalled server must raise");
  v.require(took <= 0.45, "stall took " + std::to_string(took) + " s");

  std::atomic<int> calls{0};
  stub::ScoreServer flaky([&](const httplib::Request&, httplib::Response& res) {
    if (calls++ < 2) {
      res.status = 503;
      return;
    }
    res.set_content(R"({"score": 0.3})", "application/json");
  });
  rc.endpoint = flaky.endpoint();
  rc.timeout = 1000ms;
  const double f = RemoteScorer(rc).score(obs, build_prompt("couch"));
  v.require(f == 0.3 && flaky.hits() == 3, "fault injection retry");
  v.detail << "round trip exact, stall gave up in " << took * 1000 << " ms, 503x2 recovered";
}

}  // namespace

int main() {
  report("fusion_closed_form", fusion);
  report("frontier_oracle_agreement", frontiers);
  report("fov_occlusion_soundness", occlusion);

  AblationReport rep;
  double ablation_seconds = 0.0;
  {
    const auto t0 = Clock::now();
    rep = run_ablation(ablation_config(), OracleScorer(OracleParams{5.0, 0.1, 0}));
    ablation_seconds = seconds_since(t0);
  }
  report("update_method_ordering", [&](Verdict& v) {
    const auto& j = rep.report;
    const double w = j["summaries"]["weighted"]["spl_mean"], u = j["summaries"]["unweighted"]["spl_mean"],
                 r = j["summaries"]["replacement"]["spl_mean"];
    v.require(j["ordering_holds"].get<bool>(), "ordering W >= U >= R violated");
    v.require(j["bootstrap"]["weighted_minus_replacement"]["positive_at_95"].get<bool>(), "W - R CI not positive");
    v.require(ablation_seconds < 600.0, "ablation took " + std::to_string(ablation_seconds) + " s");
    v.detail << "SPL W " << w << " U " << u << " R " << r << ", W-R CI " << j["bootstrap"]["weighted_minus_replacement"]["ci95"].dump()
             << ", " << ablation_seconds << " s";
  });
  report("value_beats_nearest", [&](Verdict& v) {
    const auto& j = rep.report;
    const double w = j["summaries"]["weighted"]["spl_mean"], g = j["summaries"]["nearest"]["spl_mean"];
    v.require(w > g, "value SPL not above nearest");
    v.require(j["bootstrap"]["value_minus_nearest"]["positive_at_95"].get<bool>(), "CI not positive");
    v.detail << "SPL value " << w << " nearest " << g << ", CI " << j["bootstrap"]["value_minus_nearest"]["ci95"].dump();
  });
  report("episode_termination_and_spl", [&](Verdict& v) { episode_rules(v, rep); });
  report("determinism_and_step_time", determinism_and_speed);
  report("remote_scorer_contract", remote_service);

  std::printf("%s\n", failures == 0 ? "ALL PASS" : "SOME CRITERIA FAILED");
  return failures == 0 ? 0 : 1;
}
