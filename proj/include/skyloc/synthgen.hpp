#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "skyloc/errors.hpp"
#include "skyloc/features.hpp"
#include "skyloc/geometry.hpp"
#include "skyloc/pairing.hpp"
#include "skyloc/rng.hpp"
#include "skyloc/tilemap.hpp"

namespace skyloc {

struct PoseRanges {
  double altitude_min = 80.0, altitude_max = 650.0;
  double roll_min = -10.0, roll_max = 10.0;
  double pitch_min = -100.0, pitch_max = -80.0;
  double yaw_min = -180.0, yaw_max = 180.0;
};

inline void validate(const PoseRanges& r) {
  if (!(r.altitude_min > 0.0) || r.altitude_min > r.altitude_max ||
      r.roll_min > r.roll_max || r.pitch_min > r.pitch_max ||
      r.yaw_min > r.yaw_max)
    throw DomainError("pose ranges are empty or non-positive");
}

// Planar feature field: a grid of cells, each carrying an i.i.d. Gaussian
// feature vector derived from (seed, cell index). Cells are materialized on
// demand, so parallel readers see identical values.
struct SyntheticWorld {
  std::uint64_t seed = 0;
  double map_width = 0.0;
  double map_height = 0.0;
  double cell_size = 64.0;
  int feature_dim = 32;
  double feature_scale = 1.0;  // uniform field scaling; output-invariant
  CameraIntrinsics intrinsics;
  PoseRanges ranges;

  int cells_x() const {
    return static_cast<int>(std::ceil(map_width / cell_size));
  }
  int cells_y() const {
    return static_cast<int>(std::ceil(map_height / cell_size));
  }

  Eigen::VectorXd cell_feature(int cx, int cy) const {
    StreamRng rng(seed, {0x63656c6cULL, static_cast<std::uint64_t>(cx),
                         static_cast<std::uint64_t>(cy)});
    Eigen::VectorXd f(feature_dim);
    for (int i = 0; i < feature_dim; ++i) f(i) = feature_scale * rng.normal();
    return f;
  }

  ConvexPolygon map_polygon() const {
    return ConvexPolygon({{0, 0},
                          {map_width, 0},
                          {map_width, map_height},
                          {0, map_height}});
  }
};

inline SyntheticWorld generate_world(std::uint64_t seed, double map_width,
                                     double map_height, double cell_size,
                                     int feature_dim,
                                     CameraIntrinsics intrinsics,
                                     PoseRanges ranges = {}) {
  if (!(map_width > 0.0) || !(map_height > 0.0) || !(cell_size > 0.0))
    throw DomainError("world dimensions must be positive");
  if (feature_dim < 1) throw DomainError("feature_dim must be >= 1");
  validate(intrinsics);
  validate(ranges);
  SyntheticWorld world;
  world.seed = seed;
  world.map_width = map_width;
  world.map_height = map_height;
  world.cell_size = cell_size;
  world.feature_dim = feature_dim;
  world.intrinsics = intrinsics;
  world.ranges = ranges;
  return world;
}

/// Area-weighted mean of cell features over `region` intersected with the
/// map, L2-normalized. Feature similarity of two regions grows with their
/// overlap, which is what makes desk-scale retrieval experiments work.
inline Eigen::VectorXd view_features(const SyntheticWorld& world,
                                     const ConvexPolygon& region) {
  const Aabb box = bounding_box(region);
  const int cx0 = std::max(0, static_cast<int>(
                                  std::floor(box.min_x / world.cell_size)));
  const int cy0 = std::max(0, static_cast<int>(
                                  std::floor(box.min_y / world.cell_size)));
  const int cx1 = std::min(world.cells_x() - 1,
                           static_cast<int>(std::floor(box.max_x /
                                                       world.cell_size)));
  const int cy1 = std::min(world.cells_y() - 1,
                           static_cast<int>(std::floor(box.max_y /
                                                       world.cell_size)));

  Eigen::VectorXd acc = Eigen::VectorXd::Zero(world.feature_dim);
  double total_area = 0.0;
  for (int cy = cy0; cy <= cy1; ++cy) {
    for (int cx = cx0; cx <= cx1; ++cx) {
      const double x0 = cx * world.cell_size;
      const double y0 = cy * world.cell_size;
      const double x1 = std::min(x0 + world.cell_size, world.map_width);
      const double y1 = std::min(y0 + world.cell_size, world.map_height);
      if (x1 <= x0 || y1 <= y0) continue;
      const ConvexPolygon cell({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
      const auto overlap = convex_intersection(region, cell);
      if (!overlap) continue;
      const double w = polygon_area(*overlap);
      if (w <= kAreaEps) continue;
      acc += w * world.cell_feature(cx, cy);
      total_area += w;
    }
  }
  if (total_area <= kAreaEps)
    throw DegenerateError("region does not overlap the map");
  acc /= total_area;
  const double norm = acc.norm();
  if (!(norm > 1e-12))
    throw DegenerateError("region feature collapsed to zero");
  return acc / norm;
}

struct SynthDataset {
  std::vector<QueryRecord> queries;
  FeatureSet features;  // query features plus all reference tile features
  BuildPairsResult pairs;
};

namespace detail {

inline CameraPose sample_pose(const SyntheticWorld& world, std::uint64_t seed,
                              std::uint64_t index, std::uint64_t attempt) {
  StreamRng rng(seed, {0x706f7365ULL, index, attempt});
  const PoseRanges& r = world.ranges;
  CameraPose pose;
  pose.ground_point = {rng.uniform(0.0, world.map_width),
                       rng.uniform(0.0, world.map_height)};
  pose.altitude = rng.uniform(r.altitude_min, r.altitude_max);
  pose.roll_deg = rng.uniform(r.roll_min, r.roll_max);
  pose.pitch_deg = rng.uniform(r.pitch_min, r.pitch_max);
  pose.yaw_deg = rng.uniform(r.yaw_min, r.yaw_max);
  return pose;
}

}  // namespace detail

/// Samples n_queries poses from the world ranges (resampling degenerate or
/// off-map poses), derives view features for queries and for every kept
/// reference tile, and builds the pair manifest.
inline SynthDataset generate_dataset(const SyntheticWorld& world,
                                     int n_queries, const TilePyramid& pyr,
                                     const PairingConfig& cfg,
                                     std::uint64_t seed) {
  if (n_queries < 1) throw DomainError("n_queries must be >= 1");
  validate(cfg);
  validate(pyr);
  if (pyr.origin.x_east < 0.0 || pyr.origin.y_north < 0.0 ||
      pyr.origin.x_east + pyr.map_width > world.map_width + 1e-6 ||
      pyr.origin.y_north + pyr.map_height > world.map_height + 1e-6)
    throw ConfigError("tile pyramid must lie within the world map");

  const ConvexPolygon map_poly = world.map_polygon();

  SynthDataset data;
  int id_width = 1;
  for (int n = n_queries; n >= 10; n /= 10) ++id_width;
  id_width = std::max(id_width, 6);

  for (int i = 0; i < n_queries; ++i) {
    bool placed = false;
    for (std::uint64_t attempt = 0; attempt < 1000 && !placed; ++attempt) {
      const CameraPose pose = detail::sample_pose(
          world, seed, static_cast<std::uint64_t>(i), attempt);
      try {
        const FootprintQuad fp = project_footprint(pose, world.intrinsics);
        const auto overlap = convex_intersection(fp.polygon(), map_poly);
        if (!overlap || polygon_area(*overlap) <= kAreaEps) continue;
        std::string id = std::to_string(i);
        id = "q" + std::string(id_width - id.size(), '0') + id;
        data.features.queries[id] =
            view_features(world, fp.polygon()).cast<float>();
        data.queries.push_back({id, pose, world.intrinsics});
        placed = true;
      } catch (const HorizonError&) {
      } catch (const DegenerateError&) {
      }
    }
    if (!placed)
      throw DomainError(
          "could not sample a valid pose; check ranges against the map");
  }

  for (int level = cfg.min_level; level <= cfg.max_level; ++level) {
    const std::int64_t n = tiles_per_side(level);
    for (std::int64_t y = 0; y < n; ++y) {
      for (std::int64_t x = 0; x < n; ++x) {
        const TileId t{level, x, y};
        if (pyr.keep && !pyr.keep->count(t)) continue;
        data.features.tiles[t] =
            view_features(world, tile_bounds(pyr, t)).cast<float>();
      }
    }
  }

  data.pairs = build_pairs(data.queries, pyr, cfg);
  return data;
}

}  // namespace skyloc
