#pragma once

// Map export: PGM occupancy, raw float32 value planes, PNG heatmaps, each
// with a JSON sidecar describing the grid. Image row i is grid row i.

#include <png.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "vlfm/io.hpp"
#include "vlfm/mapping.hpp"
#include "vlfm/value_map.hpp"

namespace vlfm {

class ExportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint8_t kPgmObstacle = 0;
inline constexpr std::uint8_t kPgmUnexplored = 128;
inline constexpr std::uint8_t kPgmExplored = 255;

inline std::vector<std::uint8_t> occupancy_bytes(const ObstacleMap& map) {
  std::vector<std::uint8_t> out(map.spec().cell_count());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = map.obstacle.data()[i] ? kPgmObstacle : (map.explored.data()[i] ? kPgmExplored : kPgmUnexplored);
  }
  return out;
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream os(path);
  if (!os) throw ExportError("cannot open " + path.string());
  os << j.dump(2) << '\n';
}

/// Binary PGM (P5), one byte per cell: 0 obstacle, 128 unexplored, 255 explored free.
inline void write_pgm(const std::filesystem::path& path, const ObstacleMap& map) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ExportError("cannot open " + path.string());
  const auto bytes = occupancy_bytes(map);
  os << "P5\n" << map.spec().width << ' ' << map.spec().height << "\n255\n";
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  nlohmann::json side{{"grid", map.spec()},
                      {"format", "pgm-p5"},
                      {"values", {{"obstacle", kPgmObstacle}, {"unexplored", kPgmUnexplored}, {"explored_free", kPgmExplored}}}};
  write_json_file(std::filesystem::path(path).concat(".json"), side);
}

inline ObstacleMap read_pgm(const std::filesystem::path& path, const GridSpec& spec) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ExportError("cannot open " + path.string());
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  is >> magic >> w >> h >> maxval;
  is.get();
  if (magic != "P5" || w != spec.width || h != spec.height || maxval != 255) throw ExportError("unexpected PGM header");
  ObstacleMap map(spec);
  std::vector<std::uint8_t> bytes(spec.cell_count());
  is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!is) throw ExportError("truncated PGM");
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    map.obstacle.data()[i] = bytes[i] == kPgmObstacle;
    map.explored.data()[i] = bytes[i] == kPgmExplored;
  }
  return map;
}

/// Row-major float32 little-endian: the value plane, then the confidence plane.
inline void write_value_dump(const std::filesystem::path& path, const ValueMap& map) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ExportError("cannot open " + path.string());
  auto put_plane = [&](const std::vector<double>& plane) {
    for (double d : plane) {
      const float f = static_cast<float>(d);
      std::array<unsigned char, 4> b{};
      std::uint32_t u = 0;
      std::memcpy(&u, &f, sizeof u);
      for (int k = 0; k < 4; ++k) b[static_cast<std::size_t>(k)] = static_cast<unsigned char>((u >> (8 * k)) & 0xffu);
      os.write(reinterpret_cast<const char*>(b.data()), 4);
    }
  };
  put_plane(map.value.data());
  put_plane(map.confidence.data());
  nlohmann::json side{{"grid", map.spec()}, {"dtype", "float32le"}, {"planes", {"value", "confidence"}}};
  write_json_file(std::filesystem::path(path).concat(".json"), side);
}

inline std::array<std::uint8_t, 3> heat_colour(double v) {
  v = std::clamp(v, 0.0, 1.0);
  const auto ch = [](double x) { return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(x, 0.0, 1.0))); };
  return {ch(1.5 - std::abs(4.0 * v - 3.0)), ch(1.5 - std::abs(4.0 * v - 2.0)), ch(1.5 - std::abs(4.0 * v - 1.0))};
}

/// Encodes 8-bit pixels (1 = gray, 3 = RGB channels) as a PNG in memory.
inline std::vector<std::uint8_t> encode_png(std::span<const std::uint8_t> pixels, int width, int height, int channels) {
  if (width <= 0 || height <= 0 || (channels != 1 && channels != 3) ||
      pixels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * static_cast<std::size_t>(channels)) {
    throw ExportError("bad PNG dimensions");
  }
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) throw ExportError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw ExportError("png_create_info_struct failed");
  }
  std::vector<std::uint8_t> out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw ExportError("libpng error while encoding");
  }
  png_set_write_fn(
      png, &out,
      [](png_structp p, png_bytep data, png_size_t len) {
        auto* v = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(p));
        v->insert(v->end(), data, data + len);
      },
      nullptr);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(width) * static_cast<std::size_t>(channels);
  for (int r = 0; r < height; ++r) {
    png_write_row(png, const_cast<png_bytep>(pixels.data() + static_cast<std::size_t>(r) * stride));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

/// RGB heatmap of the value channel; never-seen cells are black.
inline void write_value_heatmap(const std::filesystem::path& path, const ValueMap& map) {
  const GridSpec& spec = map.spec();
  std::vector<std::uint8_t> rgb(spec.cell_count() * 3, 0);
  for (std::size_t i = 0; i < spec.cell_count(); ++i) {
    if (!(map.confidence.data()[i] > 0.0)) continue;
    const auto c = heat_colour(map.value.data()[i]);
    std::copy(c.begin(), c.end(), rgb.begin() + static_cast<std::ptrdiff_t>(3 * i));
  }
  const auto png = encode_png(rgb, spec.width, spec.height, 3);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ExportError("cannot open " + path.string());
  os.write(reinterpret_cast<const char*>(png.data()), static_cast<std::streamsize>(png.size()));
  write_json_file(std::filesystem::path(path).concat(".json"), nlohmann::json{{"grid", spec}, {"format", "png-rgb8"}});
}

/// Depth scanline as a small grayscale image (near = bright), the payload
/// sent to a remote scorer in simulation.
inline std::vector<std::uint8_t> depth_image_png(const DepthScan& scan, int rows = 16) {
  const int w = static_cast<int>(scan.size());
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * static_cast<std::size_t>(rows));
  for (int c = 0; c < w; ++c) {
    // Ray 0 is rightmost, so flip to get a left-to-right image.
    const double v = scan.values[static_cast<std::size_t>(w - 1 - c)];
    const double t = DepthScan::is_return(v) ? 1.0 - v / scan.max_range : 0.0;
    const auto b = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(t, 0.0, 1.0)));
    for (int r = 0; r < rows; ++r) px[static_cast<std::size_t>(r) * static_cast<std::size_t>(w) + static_cast<std::size_t>(c)] = b;
  }
  return encode_png(px, w, rows, 1);
}

}  // namespace vlfm
