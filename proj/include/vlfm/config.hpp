#pragma once

// Run configuration: defaults, validation, JSON/TOML loading and the
// config hash embedded in every output.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "vlfm/episode.hpp"
#include "vlfm/io.hpp"
#include "vlfm/remote_scorer.hpp"
#include "vlfm/scorer.hpp"
#include "vlfm/world.hpp"

namespace vlfm {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ScorerKind { Oracle, Remote };

struct RunConfig {
  WorldParams world{};
  std::vector<std::uint64_t> world_seeds{0};
  int episodes = 1;
  EpisodeConfig episode{};
  ScorerKind scorer = ScorerKind::Oracle;
  OracleParams oracle{};
  RemoteScorerConfig remote{};
  std::string output_dir = "runs";
  int workers = 0;  // 0 = hardware concurrency
  bool dump_maps = false;
  bool write_logs = true;
};

inline void validate(const RunConfig& c) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  require(c.episodes >= 1, "episodes must be >= 1");
  require(!c.world_seeds.empty(), "at least one world seed is required");
  require(c.world.size > 0.0 && c.world.resolution > 0.0, "world size and resolution must be positive");
  require(c.world.room_count >= 0, "room_count must be >= 0");
  require(c.world.clutter >= 0.0 && c.world.clutter <= 0.5, "clutter must lie in [0, 0.5]");
  require(!c.world.categories.empty(), "at least one category is required");
  for (const auto& cat : c.world.categories) require(!cat.empty(), "categories must be non-empty strings");
  require(c.world.instances_per_category >= 1, "instances_per_category must be >= 1");
  require(c.episode.max_steps >= 1 && c.episode.max_steps <= kMaxEpisodeSteps, "max_steps must lie in [1, 500]");
  require(c.episode.sensor.rays >= 2, "sensor.rays must be >= 2");
  require(c.episode.sensor.hfov > 0.0 && c.episode.sensor.hfov < 2.0 * std::numbers::pi, "sensor.hfov_deg must lie in (0, 360)");
  require(c.episode.sensor.max_range > c.episode.sensor.min_range && c.episode.sensor.min_range >= 0.0,
          "sensor ranges must satisfy 0 <= min_range < max_range");
  require(c.episode.sensor.noise_sigma >= 0.0, "sensor.noise_sigma must be >= 0");
  require(c.episode.detection_range > 0.0, "detection_range must be positive");
  require(c.oracle.lambda > 0.0, "scorer.lambda must be positive");
  require(c.oracle.sigma >= 0.0, "scorer.sigma must be >= 0");
  require(c.remote.timeout.count() > 0, "scorer.timeout_ms must be positive");
  require(c.remote.max_retries >= 0, "scorer.max_retries must be >= 0");
  require(c.episode.policy.planner.inflation >= 0.0, "policy.inflation must be >= 0");
  require(c.episode.policy.planner.unknown_cost >= 1.0, "policy.unknown_cost must be >= 1");
  require(c.episode.policy.replan_interval >= 1, "policy.replan_interval must be >= 1");
  require(c.episode.min_frontier_length >= 1, "min_frontier_length must be >= 1");
  require(c.workers >= 0, "workers must be >= 0");
}

inline std::string_view to_string(FrontierSelection s) { return s == FrontierSelection::Value ? "value" : "nearest"; }

inline FrontierSelection parse_selection(std::string_view s) {
  if (s == "value") return FrontierSelection::Value;
  if (s == "nearest") return FrontierSelection::Nearest;
  throw ConfigError("unknown selection: " + std::string(s));
}

/// Everything that influences episode outcomes. Output location and worker
/// count are excluded, so they never change the hash.
inline nlohmann::json to_json(const RunConfig& c) {
  const auto& s = c.episode.sensor;
  const auto& p = c.episode.policy;
  nlohmann::json j;
  j["world"] = {{"size", c.world.size},
                {"resolution", c.world.resolution},
                {"room_count", c.world.room_count},
                {"clutter", c.world.clutter},
                {"categories", c.world.categories},
                {"instances_per_category", c.world.instances_per_category}};
  j["world_seeds"] = c.world_seeds;
  j["episodes"] = c.episodes;
  j["sensor"] = {{"rays", s.rays},
                 {"hfov_deg", s.hfov * 180.0 / std::numbers::pi},
                 {"min_range", s.min_range},
                 {"max_range", s.max_range},
                 {"noise_sigma", s.noise_sigma},
                 {"seed", s.seed}};
  j["method"] = to_string(c.episode.method);
  j["selection"] = to_string(p.selection);
  j["detection_range"] = c.episode.detection_range;
  j["max_steps"] = c.episode.max_steps;
  j["min_frontier_length"] = c.episode.min_frontier_length;
  j["policy"] = {{"inflation", p.planner.inflation},
                 {"unknown_cost", p.planner.unknown_cost},
                 {"replan_interval", p.replan_interval}};
  if (c.scorer == ScorerKind::Oracle) {
    j["scorer"] = {{"kind", "oracle"}, {"lambda", c.oracle.lambda}, {"sigma", c.oracle.sigma}, {"seed", c.oracle.seed}};
  } else {
    j["scorer"] = {{"kind", "remote"},
                   {"endpoint", c.remote.endpoint},
                   {"timeout_ms", c.remote.timeout.count()},
                   {"max_retries", c.remote.max_retries}};
  }
  j["log_frontier_cells"] = c.episode.log_frontier_cells;
  return j;
}

inline std::string config_hash(const RunConfig& c) { return fnv1a_hex(to_json(c).dump()); }

/// Overlays the keys present in `j` onto `c`. Unknown keys are rejected.
inline void apply_json(RunConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config root must be an object");
  auto& s = c.episode.sensor;
  auto& p = c.episode.policy;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "world") {
        for (const auto& [k, w] : v.items()) {
          if (k == "size") c.world.size = w.get<double>();
          else if (k == "resolution") c.world.resolution = w.get<double>();
          else if (k == "room_count") c.world.room_count = w.get<int>();
          else if (k == "clutter") c.world.clutter = w.get<double>();
          else if (k == "categories") c.world.categories = w.get<std::vector<std::string>>();
          else if (k == "instances_per_category") c.world.instances_per_category = w.get<int>();
          else throw ConfigError("unknown key world." + k);
        }
      } else if (key == "world_seeds") {
        c.world_seeds = v.get<std::vector<std::uint64_t>>();
      } else if (key == "episodes") {
        c.episodes = v.get<int>();
      } else if (key == "sensor") {
        for (const auto& [k, w] : v.items()) {
          if (k == "rays") s.rays = w.get<int>();
          else if (k == "hfov_deg") s.hfov = w.get<double>() * std::numbers::pi / 180.0;
          else if (k == "min_range") s.min_range = w.get<double>();
          else if (k == "max_range") s.max_range = w.get<double>();
          else if (k == "noise_sigma") s.noise_sigma = w.get<double>();
          else if (k == "seed") s.seed = w.get<std::uint64_t>();
          else throw ConfigError("unknown key sensor." + k);
        }
      } else if (key == "method") {
        c.episode.method = parse_update_method(v.get<std::string>());
      } else if (key == "selection") {
        p.selection = parse_selection(v.get<std::string>());
      } else if (key == "detection_range") {
        c.episode.detection_range = v.get<double>();
      } else if (key == "max_steps") {
        c.episode.max_steps = v.get<int>();
      } else if (key == "min_frontier_length") {
        c.episode.min_frontier_length = v.get<int>();
      } else if (key == "policy") {
        for (const auto& [k, w] : v.items()) {
          if (k == "inflation") p.planner.inflation = w.get<double>();
          else if (k == "unknown_cost") p.planner.unknown_cost = w.get<double>();
          else if (k == "replan_interval") p.replan_interval = w.get<int>();
          else throw ConfigError("unknown key policy." + k);
        }
      } else if (key == "scorer") {
        for (const auto& [k, w] : v.items()) {
          if (k == "kind") {
            const auto kind = w.get<std::string>();
            if (kind == "oracle") c.scorer = ScorerKind::Oracle;
            else if (kind == "remote") c.scorer = ScorerKind::Remote;
            else throw ConfigError("unknown scorer kind: " + kind);
          } else if (k == "lambda") c.oracle.lambda = w.get<double>();
          else if (k == "sigma") c.oracle.sigma = w.get<double>();
          else if (k == "seed") c.oracle.seed = w.get<std::uint64_t>();
          else if (k == "endpoint") c.remote.endpoint = w.get<std::string>();
          else if (k == "timeout_ms") c.remote.timeout = std::chrono::milliseconds(w.get<long long>());
          else if (k == "max_retries") c.remote.max_retries = w.get<int>();
          else throw ConfigError("unknown key scorer." + k);
        }
      } else if (key == "output_dir") {
        c.output_dir = v.get<std::string>();
      } else if (key == "workers") {
        c.workers = v.get<int>();
      } else if (key == "dump_maps") {
        c.dump_maps = v.get<bool>();
      } else if (key == "log_frontier_cells") {
        c.episode.log_frontier_cells = v.get<bool>();
      } else {
        throw ConfigError("unknown config key: " + key);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
}

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Drops a trailing '#' comment that is not inside a string.
inline std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

inline nlohmann::json parse_toml_value(const std::string& raw, int lineno) {
  const std::string v = trim(raw);
  auto fail = [&]() -> nlohmann::json {
    throw ConfigError("TOML line " + std::to_string(lineno) + ": cannot parse value '" + v + "'");
  };
  if (v.empty()) return fail();
  if (v == "true") return true;
  if (v == "false") return false;
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"') return fail();
    // Basic strings share JSON's escape rules.
    try {
      return nlohmann::json::parse(v);
    } catch (const nlohmann::json::exception&) {
      return fail();
    }
  }
  if (v.front() == '[') {
    if (v.back() != ']') return fail();
    nlohmann::json arr = nlohmann::json::array();
    std::string item;
    bool in_str = false;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
      const char ch = v[i];
      if (ch == '"' && v[i - 1] != '\\') in_str = !in_str;
      if (ch == ',' && !in_str) {
        if (!trim(item).empty()) arr.push_back(parse_toml_value(item, lineno));
        item.clear();
      } else {
        item += ch;
      }
    }
    if (!trim(item).empty()) arr.push_back(parse_toml_value(item, lineno));
    return arr;
  }
  std::string num;
  for (char ch : v) {
    if (ch != '_') num += ch;
  }
  try {
    std::size_t used = 0;
    if (num.find_first_of(".eE") == std::string::npos) {
      const long long i = std::stoll(num, &used);
      if (used == num.size()) return i;
    } else {
      const double d = std::stod(num, &used);
      if (used == num.size()) return d;
    }
  } catch (const std::exception&) {
  }
  return fail();
}

}  // namespace detail

/// Parses the TOML subset used by run configs: [table] headers (dotted names
/// allowed), `key = value` with strings, integers, floats, booleans and
/// single-line arrays, and '#' comments.
inline nlohmann::json parse_toml(std::istream& in) {
  nlohmann::json root = nlohmann::json::object();
  nlohmann::json::json_pointer table("");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string l = detail::trim(detail::strip_comment(line));
    if (l.empty()) continue;
    if (l.front() == '[') {
      if (l.back() != ']' || l.size() < 3) throw ConfigError("TOML line " + std::to_string(lineno) + ": bad table header");
      table = nlohmann::json::json_pointer("");
      std::stringstream parts(l.substr(1, l.size() - 2));
      std::string part;
      while (std::getline(parts, part, '.')) {
        part = detail::trim(part);
        if (part.empty()) throw ConfigError("TOML line " + std::to_string(lineno) + ": empty table name");
        table /= part;
      }
      if (!root.contains(table)) root[table] = nlohmann::json::object();
      continue;
    }
    const auto eq = l.find('=');
    if (eq == std::string::npos) throw ConfigError("TOML line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(l.substr(0, eq));
    if (key.empty()) throw ConfigError("TOML line " + std::to_string(lineno) + ": empty key");
    root[table / key] = detail::parse_toml_value(l.substr(eq + 1), lineno);
  }
  return root;
}

/// Loads JSON or TOML, chosen by extension (.json / .toml) or else by whether
/// the first non-blank character is '{'.
inline nlohmann::json load_config_document(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const auto ext = path.extension().string();
  bool json = ext == ".json";
  if (ext != ".json" && ext != ".toml") {
    const auto first = text.find_first_not_of(" \t\r\n");
    json = first != std::string::npos && text[first] == '{';
  }
  if (json) {
    try {
      return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("bad JSON config: ") + e.what());
    }
  }
  std::istringstream is(text);
  return parse_toml(is);
}

}  // namespace vlfm
