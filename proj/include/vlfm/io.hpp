#pragma once

// JSON encodings for the types that appear in logs and sidecars.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>

#include "json.hpp"
#include "vlfm/core_grid.hpp"
#include "vlfm/frontier.hpp"

namespace vlfm {

inline void to_json(nlohmann::json& j, const Point2& p) { j = nlohmann::json::array({p.x, p.y}); }
inline void from_json(const nlohmann::json& j, Point2& p) {
  p.x = j.at(0).get<double>();
  p.y = j.at(1).get<double>();
}

inline void to_json(nlohmann::json& j, const Cell& c) { j = nlohmann::json::array({c.row, c.col}); }
inline void from_json(const nlohmann::json& j, Cell& c) {
  c.row = j.at(0).get<int>();
  c.col = j.at(1).get<int>();
}

inline void to_json(nlohmann::json& j, const Pose2D& p) {
  j = nlohmann::json{{"x", p.x}, {"y", p.y}, {"heading", p.heading()}};
}
inline void from_json(const nlohmann::json& j, Pose2D& p) {
  p = Pose2D(j.at("x").get<double>(), j.at("y").get<double>(), j.at("heading").get<double>());
}

inline void to_json(nlohmann::json& j, const GridSpec& s) {
  j = nlohmann::json{{"resolution", s.resolution}, {"origin", s.origin}, {"width", s.width}, {"height", s.height}};
}
inline void from_json(const nlohmann::json& j, GridSpec& s) {
  s.resolution = j.at("resolution").get<double>();
  s.origin = j.at("origin").get<Point2>();
  s.width = j.at("width").get<int>();
  s.height = j.at("height").get<int>();
}

/// Frontier as logged: midpoint and length, plus the chain when `with_cells`.
inline nlohmann::json frontier_json(const Frontier& f, bool with_cells) {
  nlohmann::json j{{"midpoint", f.midpoint}, {"length", f.length_cells()}};
  if (with_cells) j["cells"] = f.cells;
  return j;
}

/// FNV-1a 64-bit, rendered as 16 lowercase hex digits.
inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// JSON has no infinity; unreachable distances are written as null.
inline nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace vlfm
