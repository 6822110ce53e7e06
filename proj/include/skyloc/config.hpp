#pragma once

// Config files: the tile pyramid, the synthetic world, and the run config
// that binds subcommand parameters together. Inputs are JSON; writers exist
// for fixtures and are byte-stable like every other writer.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "skyloc/errors.hpp"
#include "skyloc/io.hpp"
#include "skyloc/loss.hpp"
#include "skyloc/pairing.hpp"
#include "skyloc/synthgen.hpp"
#include "skyloc/tilemap.hpp"
#include "skyloc/trainer.hpp"

namespace skyloc {
namespace io {

// ---------------------------------------------------------------------------
// pyramid config

inline TilePyramid read_pyramid_config(const std::filesystem::path& path) {
  const auto root = parse_json(read_text_file(path), path.string());
  expect_format(root, "skyloc-pyramid", 1, path.string());
  TilePyramid pyr;
  pyr.origin = {root.at("origin").at(0).get<double>(),
                root.at("origin").at(1).get<double>()};
  pyr.map_width = root.at("map_width").get<double>();
  pyr.map_height = root.at("map_height").get<double>();
  pyr.tile_pixels = root.value("tile_pixels", 256);
  pyr.min_level = root.value("min_level", 0);
  pyr.max_level = root.at("max_level").get<int>();
  if (root.contains("keep") && !root["keep"].is_null()) {
    std::set<TileId> keep;
    for (const auto& t : root["keep"])
      keep.insert({t.at(0).get<int>(), t.at(1).get<std::int64_t>(),
                   t.at(2).get<std::int64_t>()});
    pyr.keep = std::move(keep);
  }
  validate(pyr);
  return pyr;
}

inline std::string write_pyramid_config_text(const TilePyramid& pyr) {
  std::string out = "{\"format\":\"skyloc-pyramid\",\"version\":1";
  out += ",\"origin\":[" + format_double(pyr.origin.x_east) + "," +
         format_double(pyr.origin.y_north) + "]";
  out += ",\"map_width\":" + format_double(pyr.map_width);
  out += ",\"map_height\":" + format_double(pyr.map_height);
  out += ",\"tile_pixels\":" + std::to_string(pyr.tile_pixels);
  out += ",\"min_level\":" + std::to_string(pyr.min_level);
  out += ",\"max_level\":" + std::to_string(pyr.max_level);
  if (pyr.keep) {
    out += ",\"keep\":[";
    bool first = true;
    for (const auto& t : *pyr.keep) {
      if (!first) out += ",";
      first = false;
      out += "[" + std::to_string(t.level) + "," + std::to_string(t.x) +
             "," + std::to_string(t.y) + "]";
    }
    out += "]";
  }
  out += "}\n";
  return out;
}

inline void write_pyramid_config(const std::filesystem::path& path,
                                 const TilePyramid& pyr) {
  write_text_file(path, write_pyramid_config_text(pyr));
}

// ---------------------------------------------------------------------------
// world config (intrinsics are required: the source material gives no
// default field of view)

inline SyntheticWorld read_world_config(const std::filesystem::path& path) {
  const auto root = parse_json(read_text_file(path), path.string());
  expect_format(root, "skyloc-world", 1, path.string());
  PoseRanges ranges;
  auto range = [&root](const char* key, double& lo, double& hi) {
    if (root.contains(key)) {
      lo = root.at(key).at(0).get<double>();
      hi = root.at(key).at(1).get<double>();
    }
  };
  range("altitude_range", ranges.altitude_min, ranges.altitude_max);
  range("roll_range", ranges.roll_min, ranges.roll_max);
  range("pitch_range", ranges.pitch_min, ranges.pitch_max);
  range("yaw_range", ranges.yaw_min, ranges.yaw_max);

  auto world = generate_world(
      root.at("seed").get<std::uint64_t>(), root.at("map_width").get<double>(),
      root.at("map_height").get<double>(), root.at("cell_size").get<double>(),
      root.at("feature_dim").get<int>(),
      {root.at("hfov").get<double>(), root.at("vfov").get<double>()}, ranges);
  world.feature_scale = root.value("feature_scale", 1.0);
  return world;
}

inline std::string write_world_config_text(const SyntheticWorld& world) {
  std::string out = "{\"format\":\"skyloc-world\",\"version\":1";
  out += ",\"seed\":" + std::to_string(world.seed);
  out += ",\"map_width\":" + format_double(world.map_width);
  out += ",\"map_height\":" + format_double(world.map_height);
  out += ",\"cell_size\":" + format_double(world.cell_size);
  out += ",\"feature_dim\":" + std::to_string(world.feature_dim);
  out += ",\"feature_scale\":" + format_double(world.feature_scale);
  out += ",\"hfov\":" + format_double(world.intrinsics.hfov_deg);
  out += ",\"vfov\":" + format_double(world.intrinsics.vfov_deg);
  const auto& r = world.ranges;
  out += ",\"altitude_range\":[" + format_double(r.altitude_min) + "," +
         format_double(r.altitude_max) + "]";
  out += ",\"roll_range\":[" + format_double(r.roll_min) + "," +
         format_double(r.roll_max) + "]";
  out += ",\"pitch_range\":[" + format_double(r.pitch_min) + "," +
         format_double(r.pitch_max) + "]";
  out += ",\"yaw_range\":[" + format_double(r.yaw_min) + "," +
         format_double(r.yaw_max) + "]";
  out += "}\n";
  return out;
}

inline void write_world_config(const std::filesystem::path& path,
                               const SyntheticWorld& world) {
  write_text_file(path, write_world_config_text(world));
}

// ---------------------------------------------------------------------------
// run config

struct SplitSpec {
  SplitMode mode = SplitMode::kCrossArea;
  std::vector<GeoPoint> boundary;  // cross-area training region
  double ratio = 0.8;
  std::uint64_t seed = 0;

  AreaSplit to_area_split() const {
    AreaSplit split;
    split.mode = mode;
    if (!boundary.empty()) split.boundary = ConvexPolygon(boundary);
    split.ratio = ratio;
    split.seed = seed;
    return split;
  }
};

struct EvalSpec {
  std::vector<int> recall_ks{1, 5};
  int sdm_k = 3;
  double sdm_scale = 100.0;
};

struct RunConfig {
  std::filesystem::path pyramid_config;
  std::filesystem::path world_config;
  int n_queries = 0;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
  PairingConfig pairing;
  SplitSpec split;
  LossKind loss_kind = LossKind::kWeightedInfonce;
  TrainConfig train;
  EvalSpec eval;
};

inline LossKind loss_kind_from_string(const std::string& s) {
  if (s == "triplet") return LossKind::kTriplet;
  if (s == "infonce") return LossKind::kInfonce;
  if (s == "weighted-infonce") return LossKind::kWeightedInfonce;
  throw ConfigError("unknown loss kind '" + s + "'");
}

inline AlphaConvention alpha_convention_from_string(const std::string& s) {
  if (s == "as-printed") return AlphaConvention::kAsPrinted;
  if (s == "increasing") return AlphaConvention::kIncreasing;
  throw ConfigError("unknown alpha convention '" + s + "'");
}

inline RunConfig read_run_config(const std::filesystem::path& path) {
  const auto root = parse_json(read_text_file(path), path.string());
  expect_format(root, "skyloc-run", 1, path.string());
  const auto base = path.parent_path();

  RunConfig cfg;
  if (root.contains("pyramid_config"))
    cfg.pyramid_config = base / root.at("pyramid_config").get<std::string>();
  if (root.contains("world_config"))
    cfg.world_config = base / root.at("world_config").get<std::string>();
  cfg.n_queries = root.value("n_queries", 0);
  cfg.seed = root.value("seed", std::uint64_t{0});
  cfg.out_dir = root.value("out_dir", std::string("out"));
  if (cfg.out_dir.is_relative()) cfg.out_dir = base / cfg.out_dir;

  if (root.contains("pairing")) {
    const auto& p = root["pairing"];
    cfg.pairing.t_pos = p.value("t_pos", cfg.pairing.t_pos);
    cfg.pairing.t_semi = p.value("t_semi", cfg.pairing.t_semi);
    cfg.pairing.min_level = p.value("min_level", cfg.pairing.min_level);
    cfg.pairing.max_level = p.value("max_level", cfg.pairing.max_level);
    validate(cfg.pairing);
  }

  if (root.contains("split")) {
    const auto& s = root["split"];
    const std::string mode = s.value("mode", "cross-area");
    if (mode == "cross-area")
      cfg.split.mode = SplitMode::kCrossArea;
    else if (mode == "same-area")
      cfg.split.mode = SplitMode::kSameArea;
    else
      throw ConfigError("unknown split mode '" + mode + "'");
    if (s.contains("boundary"))
      for (const auto& v : s["boundary"])
        cfg.split.boundary.push_back(
            {v.at(0).get<double>(), v.at(1).get<double>()});
    cfg.split.ratio = s.value("ratio", cfg.split.ratio);
    cfg.split.seed = s.value("seed", cfg.split.seed);
  }

  if (root.contains("loss")) {
    const auto& l = root["loss"];
    cfg.loss_kind = loss_kind_from_string(
        l.value("kind", std::string("weighted-infonce")));
    cfg.train.loss.k = l.value("k", cfg.train.loss.k);
    cfg.train.loss.tau_init = l.value("tau_init", cfg.train.loss.tau_init);
    cfg.train.loss.symmetric = l.value("symmetric", cfg.train.loss.symmetric);
    if (l.contains("alpha_convention"))
      cfg.train.loss.alpha_convention = alpha_convention_from_string(
          l["alpha_convention"].get<std::string>());
    cfg.train.loss.margin = l.value("margin", cfg.train.loss.margin);
    validate(cfg.train.loss);
  }

  if (root.contains("train")) {
    const auto& t = root["train"];
    cfg.train.epochs = t.value("epochs", cfg.train.epochs);
    cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
    cfg.train.learning_rate = t.value("lr", cfg.train.learning_rate);
    cfg.train.seed = t.value("seed", cfg.train.seed);
    if (t.contains("data_mode"))
      cfg.train.data_mode =
          data_mode_from_string(t["data_mode"].get<std::string>());
    cfg.train.embed_dim = t.value("embed_dim", cfg.train.embed_dim);
    cfg.train.shared_weights =
        t.value("shared_weights", cfg.train.shared_weights);
    cfg.train.strict_sampling =
        t.value("strict_sampling", cfg.train.strict_sampling);
  }
  cfg.train.loss_kind = cfg.loss_kind;

  if (root.contains("eval")) {
    const auto& e = root["eval"];
    if (e.contains("recall_ks")) {
      cfg.eval.recall_ks.clear();
      for (const auto& k : e["recall_ks"])
        cfg.eval.recall_ks.push_back(k.get<int>());
    }
    cfg.eval.sdm_k = e.value("sdm_k", cfg.eval.sdm_k);
    cfg.eval.sdm_scale = e.value("sdm_scale", cfg.eval.sdm_scale);
  }
  return cfg;
}

}  // namespace io
}  // namespace skyloc
