#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "skyloc/errors.hpp"
#include "skyloc/geometry.hpp"

namespace skyloc {

struct TileId {
  int level = 0;
  std::int64_t x = 0;
  std::int64_t y = 0;

  // Deterministic ordering used for manifests, ranking tie-breaks and
  // enumeration: (level, y, x).
  friend bool operator<(const TileId& a, const TileId& b) {
    return std::tie(a.level, a.y, a.x) < std::tie(b.level, b.y, b.x);
  }
  friend bool operator==(const TileId& a, const TileId& b) {
    return a.level == b.level && a.x == b.x && a.y == b.y;
  }
};

/// Canonical "level/x/y" form used in schedule files and messages.
inline std::string to_string(const TileId& t) {
  return std::to_string(t.level) + "/" + std::to_string(t.x) + "/" +
         std::to_string(t.y);
}

// Quadtree pyramid over a rectangular map, origin at the south-west corner.
// Level L splits the map into 2^L x 2^L tiles. The optional keep set models
// the reference inventory: when present, tiles outside it do not exist for
// enumeration (tile_bounds still answers for any index in range).
struct TilePyramid {
  GeoPoint origin;
  double map_width = 0.0;
  double map_height = 0.0;
  int tile_pixels = 256;
  int min_level = 0;
  int max_level = 0;
  std::optional<std::set<TileId>> keep;
};

inline void validate(const TilePyramid& pyr) {
  if (!(pyr.map_width > 0.0) || !(pyr.map_height > 0.0))
    throw DomainError("map dimensions must be positive");
  if (pyr.tile_pixels <= 0) throw DomainError("tile_pixels must be positive");
  if (pyr.min_level < 0 || pyr.min_level > pyr.max_level ||
      pyr.max_level > 30)
    throw DomainError("pyramid levels must satisfy 0 <= min <= max <= 30");
}

inline std::int64_t tiles_per_side(int level) {
  return std::int64_t{1} << level;
}

inline bool tile_in_range(const TilePyramid& pyr, const TileId& t) {
  const std::int64_t n = tiles_per_side(t.level);
  return t.level >= pyr.min_level && t.level <= pyr.max_level && t.x >= 0 &&
         t.x < n && t.y >= 0 && t.y < n;
}

/// Axis-aligned tile rectangle as a counter-clockwise polygon.
inline ConvexPolygon tile_bounds(const TilePyramid& pyr, const TileId& t) {
  if (!tile_in_range(pyr, t))
    throw OutOfRangeError("tile " + to_string(t) + " outside pyramid");
  const double n = static_cast<double>(tiles_per_side(t.level));
  const double tw = pyr.map_width / n;
  const double th = pyr.map_height / n;
  const double x0 = pyr.origin.x_east + static_cast<double>(t.x) * tw;
  const double y0 = pyr.origin.y_north + static_cast<double>(t.y) * th;
  return ConvexPolygon({{x0, y0}, {x0 + tw, y0}, {x0 + tw, y0 + th},
                        {x0, y0 + th}});
}

inline GeoPoint tile_center(const TilePyramid& pyr, const TileId& t) {
  if (!tile_in_range(pyr, t))
    throw OutOfRangeError("tile " + to_string(t) + " outside pyramid");
  const double n = static_cast<double>(tiles_per_side(t.level));
  return {pyr.origin.x_east + (static_cast<double>(t.x) + 0.5) *
                                  pyr.map_width / n,
          pyr.origin.y_north + (static_cast<double>(t.y) + 0.5) *
                                   pyr.map_height / n};
}

/// Meters per pixel along the x axis at the given level; halves per level.
inline double ground_resolution(const TilePyramid& pyr, int level) {
  if (level < pyr.min_level || level > pyr.max_level)
    throw OutOfRangeError("level " + std::to_string(level) +
                          " outside pyramid");
  return pyr.map_width /
         (static_cast<double>(tiles_per_side(level)) * pyr.tile_pixels);
}

/// All kept tiles in [level_lo, level_hi] whose bounds overlap `region`
/// with positive area, sorted by (level, y, x).
inline std::vector<TileId> tiles_overlapping(const TilePyramid& pyr,
                                             const ConvexPolygon& region,
                                             int level_lo, int level_hi) {
  if (level_lo < pyr.min_level || level_hi > pyr.max_level ||
      level_lo > level_hi)
    throw OutOfRangeError("requested levels outside pyramid");

  const Aabb box = bounding_box(region);
  std::vector<TileId> result;
  for (int level = level_lo; level <= level_hi; ++level) {
    const std::int64_t n = tiles_per_side(level);
    const double tw = pyr.map_width / static_cast<double>(n);
    const double th = pyr.map_height / static_cast<double>(n);
    auto clamp_idx = [n](double v) {
      return std::clamp<std::int64_t>(
          static_cast<std::int64_t>(std::floor(v)), 0, n - 1);
    };
    const std::int64_t x0 = clamp_idx((box.min_x - pyr.origin.x_east) / tw);
    const std::int64_t x1 = clamp_idx((box.max_x - pyr.origin.x_east) / tw);
    const std::int64_t y0 = clamp_idx((box.min_y - pyr.origin.y_north) / th);
    const std::int64_t y1 = clamp_idx((box.max_y - pyr.origin.y_north) / th);
    for (std::int64_t y = y0; y <= y1; ++y) {
      for (std::int64_t x = x0; x <= x1; ++x) {
        const TileId t{level, x, y};
        if (pyr.keep && !pyr.keep->count(t)) continue;
        const auto overlap = convex_intersection(region, tile_bounds(pyr, t));
        if (overlap && polygon_area(*overlap) > kAreaEps)
          result.push_back(t);
      }
    }
  }
  return result;  // construction order is already (level, y, x)
}

}  // namespace skyloc
