#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "skyloc/errors.hpp"
#include "skyloc/geometry.hpp"
#include "skyloc/rng.hpp"
#include "skyloc/tilemap.hpp"

namespace skyloc {

struct QueryRecord {
  std::string query_id;
  CameraPose pose;
  CameraIntrinsics intr;
};

enum class PairLabel { kPositive, kSemiPositive };

inline const char* to_string(PairLabel label) {
  return label == PairLabel::kPositive ? "positive" : "semi-positive";
}

struct PairRecord {
  std::string query_id;
  TileId tile;
  double iou_value = 0.0;
  PairLabel label = PairLabel::kSemiPositive;
};

struct PairingConfig {
  double t_pos = 0.39;
  double t_semi = 0.14;
  int min_level = 4;
  int max_level = 7;
};

inline void validate(const PairingConfig& cfg) {
  if (!(cfg.t_semi >= 0.0 && cfg.t_semi < cfg.t_pos && cfg.t_pos <= 1.0))
    throw DomainError("pairing thresholds must satisfy 0 <= t_semi < t_pos <= 1");
  if (cfg.min_level < 0 || cfg.min_level > cfg.max_level)
    throw DomainError("pairing levels must satisfy 0 <= min <= max");
}

// Tie rule: label = positive iff iou > t_pos; semi-positive iff
// t_semi < iou <= t_pos; below or equal to t_semi no pair is emitted.
inline std::optional<PairLabel> classify_iou(double iou_value,
                                             const PairingConfig& cfg) {
  if (iou_value > cfg.t_pos) return PairLabel::kPositive;
  if (iou_value > cfg.t_semi) return PairLabel::kSemiPositive;
  return std::nullopt;
}

struct SkippedQuery {
  std::string query_id;
  std::string reason;
};

struct BuildPairsResult {
  std::vector<PairRecord> pairs;      // ordered by (query_id, level, y, x)
  std::vector<SkippedQuery> skipped;  // queries whose footprint failed
};

/// Pairs every query with every kept tile in the configured levels whose
/// footprint IOU exceeds t_semi. Degenerate poses are reported, not fatal.
inline BuildPairsResult build_pairs(const std::vector<QueryRecord>& queries,
                                    const TilePyramid& pyr,
                                    const PairingConfig& cfg) {
  validate(cfg);
  validate(pyr);

  std::unordered_set<std::string> seen;
  for (const auto& q : queries) {
    if (!seen.insert(q.query_id).second)
      throw DomainError("duplicate query_id: " + q.query_id);
  }

  std::vector<const QueryRecord*> ordered;
  ordered.reserve(queries.size());
  for (const auto& q : queries) ordered.push_back(&q);
  std::sort(ordered.begin(), ordered.end(),
            [](const QueryRecord* a, const QueryRecord* b) {
              return a->query_id < b->query_id;
            });

  BuildPairsResult result;
  for (const QueryRecord* q : ordered) {
    std::optional<FootprintQuad> footprint;
    try {
      footprint = project_footprint(q->pose, q->intr);
    } catch (const HorizonError& e) {
      result.skipped.push_back({q->query_id, e.what()});
      continue;
    } catch (const DegenerateError& e) {
      result.skipped.push_back({q->query_id, e.what()});
      continue;
    }
    const auto tiles = tiles_overlapping(pyr, footprint->polygon(),
                                         cfg.min_level, cfg.max_level);
    for (const TileId& t : tiles) {
      const double overlap = iou(footprint->polygon(), tile_bounds(pyr, t));
      if (const auto label = classify_iou(overlap, cfg)) {
        result.pairs.push_back({q->query_id, t, overlap, *label});
      }
    }
  }
  return result;
}

enum class SplitMode { kSameArea, kCrossArea };

struct AreaSplit {
  SplitMode mode = SplitMode::kCrossArea;
  std::optional<ConvexPolygon> boundary;  // training region, cross-area mode
  double ratio = 0.8;                     // train fraction, same-area mode
  std::uint64_t seed = 0;                 // same-area shuffle seed
};

struct SplitResult {
  std::vector<QueryRecord> train_queries;
  std::vector<QueryRecord> test_queries;
  std::vector<PairRecord> train_pairs;
  std::vector<PairRecord> test_pairs;
};

/// Partitions queries (and their pairs) into train/test. Cross-area mode
/// assigns a query to train iff its ground point lies inside the boundary
/// (boundary-inclusive); same-area mode is a seeded uniform split.
inline SplitResult split_area(const std::vector<QueryRecord>& queries,
                              const std::vector<PairRecord>& pairs,
                              const AreaSplit& split) {
  std::vector<bool> in_train(queries.size(), false);
  if (split.mode == SplitMode::kCrossArea) {
    if (!split.boundary)
      throw ConfigError("cross-area split requires a boundary polygon");
    for (std::size_t i = 0; i < queries.size(); ++i)
      in_train[i] = contains(*split.boundary, queries[i].pose.ground_point);
  } else {
    if (!(split.ratio > 0.0 && split.ratio < 1.0))
      throw DomainError("same-area ratio must lie in (0, 1)");
    std::vector<std::size_t> order(queries.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    StreamRng rng(split.seed, {0x73706c6974ULL});  // same-area stream
    shuffle(order, rng);
    const auto n_train = static_cast<std::size_t>(
        std::llround(split.ratio * static_cast<double>(queries.size())));
    for (std::size_t i = 0; i < order.size(); ++i)
      in_train[order[i]] = i < n_train;
  }

  SplitResult result;
  std::unordered_set<std::string> train_ids;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    if (in_train[i]) {
      result.train_queries.push_back(queries[i]);
      train_ids.insert(queries[i].query_id);
    } else {
      result.test_queries.push_back(queries[i]);
    }
  }
  if (result.train_queries.empty() || result.test_queries.empty())
    throw EmptySplitError("split left one side without queries");

  for (const auto& p : pairs) {
    if (train_ids.count(p.query_id))
      result.train_pairs.push_back(p);
    else
      result.test_pairs.push_back(p);
  }
  return result;
}

}  // namespace skyloc
