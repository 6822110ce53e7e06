// Command-line surface: deterministic pipelines over the library modules.
// Every subcommand reads a run config (plus overrides), writes its artifacts
// under the output directory, and exits non-zero with one machine-readable
// error line on failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "skyloc/skyloc.hpp"

namespace fs = std::filesystem;
using namespace skyloc;

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<double> k;
  std::optional<std::string> alpha_convention;
  std::optional<std::string> mode;
  std::optional<std::string> loss_kind;
  std::optional<double> lr;
  bool strict_sampling = false;
};

void add_common_options(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "run config (JSON)")
      ->required();
  cmd->add_option("--seed", args.seed, "override the run seed");
  cmd->add_option("--out", args.out_dir, "override the output directory");
  cmd->add_option("--k", args.k, "weighted-InfoNCE sharpness k");
  cmd->add_option("--alpha-convention", args.alpha_convention,
                  "alpha convention: as-printed|increasing");
  cmd->add_option("--mode", args.mode,
                  "training data mode: positive-only|positive-semi");
  cmd->add_option("--loss", args.loss_kind,
                  "loss kind: triplet|infonce|weighted-infonce");
  cmd->add_option("--lr", args.lr, "override the learning rate");
  cmd->add_flag("--strict-sampling", args.strict_sampling,
                "use the strict batch sampler");
}

io::RunConfig load_config(const CommonArgs& args) {
  auto cfg = io::read_run_config(args.config_path);
  if (args.seed) cfg.seed = *args.seed;
  if (args.out_dir) cfg.out_dir = *args.out_dir;
  if (args.k) cfg.train.loss.k = *args.k;
  if (args.alpha_convention)
    cfg.train.loss.alpha_convention =
        io::alpha_convention_from_string(*args.alpha_convention);
  if (args.mode) cfg.train.data_mode = io::data_mode_from_string(*args.mode);
  if (args.loss_kind) {
    cfg.loss_kind = io::loss_kind_from_string(*args.loss_kind);
    cfg.train.loss_kind = cfg.loss_kind;
  }
  if (args.lr) cfg.train.learning_rate = *args.lr;
  if (args.strict_sampling) cfg.train.strict_sampling = true;
  fs::create_directories(cfg.out_dir);
  return cfg;
}

void require_exists(const fs::path& path, const std::string& what) {
  if (!fs::exists(path))
    throw ConfigError(what + " not found: " + path.string());
}

FeatureSet load_features(const fs::path& query_file,
                         const fs::path& tile_file) {
  require_exists(query_file, "query feature file");
  require_exists(tile_file, "tile feature file");
  FeatureSet features;
  features.queries = io::read_query_vectors(query_file);
  features.tiles = io::read_tile_vectors(tile_file);
  validate(features);
  return features;
}

// ---------------------------------------------------------------------------

int cmd_synth_world(const CommonArgs& args) {
  const auto cfg = load_config(args);
  require_exists(cfg.world_config, "world config");
  require_exists(cfg.pyramid_config, "pyramid config");
  const auto world = io::read_world_config(cfg.world_config);
  const auto pyramid = io::read_pyramid_config(cfg.pyramid_config);
  if (cfg.n_queries < 1) throw ConfigError("n_queries must be >= 1");

  const auto data =
      generate_dataset(world, cfg.n_queries, pyramid, cfg.pairing, cfg.seed);

  io::write_queries(cfg.out_dir / "queries.jsonl", data.queries);
  io::write_pair_manifest(
      cfg.out_dir / "pairs.jsonl",
      {cfg.pairing, data.pairs.skipped, data.pairs.pairs});
  io::write_query_vectors(cfg.out_dir / "query_features.bin",
                          data.features.queries);
  io::write_tile_vectors(cfg.out_dir / "tile_features.bin",
                         data.features.tiles);
  std::printf("synth-world: %zu queries, %zu pairs, %zu reference tiles\n",
              data.queries.size(), data.pairs.pairs.size(),
              data.features.tiles.size());
  return 0;
}

int cmd_build_pairs(const CommonArgs& args, const std::string& queries_file) {
  const auto cfg = load_config(args);
  require_exists(cfg.pyramid_config, "pyramid config");
  const auto pyramid = io::read_pyramid_config(cfg.pyramid_config);
  const fs::path queries_path =
      queries_file.empty() ? cfg.out_dir / "queries.jsonl"
                           : fs::path(queries_file);
  require_exists(queries_path, "query file");
  const auto queries = io::read_queries(queries_path);

  const auto result = build_pairs(queries, pyramid, cfg.pairing);
  io::write_pair_manifest(cfg.out_dir / "pairs.jsonl",
                          {cfg.pairing, result.skipped, result.pairs});
  std::printf("build-pairs: %zu pairs (%zu queries skipped)\n",
              result.pairs.size(), result.skipped.size());
  return 0;
}

int cmd_split(const CommonArgs& args, const std::string& queries_file,
              const std::string& pairs_file) {
  const auto cfg = load_config(args);
  const fs::path queries_path =
      queries_file.empty() ? cfg.out_dir / "queries.jsonl"
                           : fs::path(queries_file);
  const fs::path pairs_path = pairs_file.empty()
                                  ? cfg.out_dir / "pairs.jsonl"
                                  : fs::path(pairs_file);
  require_exists(queries_path, "query file");
  require_exists(pairs_path, "pair manifest");
  const auto queries = io::read_queries(queries_path);
  const auto manifest = io::read_pair_manifest(pairs_path);

  const auto result =
      split_area(queries, manifest.pairs, cfg.split.to_area_split());
  io::write_queries(cfg.out_dir / "train_queries.jsonl",
                    result.train_queries);
  io::write_queries(cfg.out_dir / "test_queries.jsonl", result.test_queries);
  io::write_pair_manifest(cfg.out_dir / "train_pairs.jsonl",
                          {manifest.config, {}, result.train_pairs});
  io::write_pair_manifest(cfg.out_dir / "test_pairs.jsonl",
                          {manifest.config, {}, result.test_pairs});
  std::printf("split: %zu train / %zu test queries\n",
              result.train_queries.size(), result.test_queries.size());
  return 0;
}

int cmd_sample_batches(const CommonArgs& args, const std::string& pairs_file) {
  const auto cfg = load_config(args);
  fs::path pairs_path = pairs_file.empty() ? cfg.out_dir / "train_pairs.jsonl"
                                           : fs::path(pairs_file);
  if (pairs_file.empty() && !fs::exists(pairs_path))
    pairs_path = cfg.out_dir / "pairs.jsonl";
  require_exists(pairs_path, "pair manifest");
  const auto manifest = io::read_pair_manifest(pairs_path);

  const auto graph =
      PairGraph::from_pairs(manifest.pairs, cfg.train.data_mode);
  io::BatchSchedule schedule;
  schedule.batch_size = cfg.train.batch_size;
  schedule.seed = cfg.seed;
  schedule.strict = cfg.train.strict_sampling;
  schedule.mode = cfg.train.data_mode;
  schedule.batches =
      cfg.train.strict_sampling
          ? strict_sample_epoch(graph, cfg.train.batch_size, cfg.seed)
          : sample_epoch(graph, cfg.train.batch_size, cfg.seed);
  io::write_schedule(cfg.out_dir / "schedule.txt", schedule);
  std::printf("sample-batches: %zu batches of %d\n",
              schedule.batches.size(), schedule.batch_size);
  return 0;
}

int cmd_train_toy(const CommonArgs& args, const std::string& pairs_file,
                  const std::string& query_features_file,
                  const std::string& tile_features_file) {
  const auto cfg = load_config(args);
  fs::path pairs_path = pairs_file.empty() ? cfg.out_dir / "train_pairs.jsonl"
                                           : fs::path(pairs_file);
  if (pairs_file.empty() && !fs::exists(pairs_path))
    pairs_path = cfg.out_dir / "pairs.jsonl";
  require_exists(pairs_path, "pair manifest");
  const auto manifest = io::read_pair_manifest(pairs_path);
  const auto features = load_features(
      query_features_file.empty() ? cfg.out_dir / "query_features.bin"
                                  : fs::path(query_features_file),
      tile_features_file.empty() ? cfg.out_dir / "tile_features.bin"
                                 : fs::path(tile_features_file));

  const auto result = train(cfg.train, manifest.pairs, features);
  io::write_checkpoint(cfg.out_dir / "checkpoint.bin", result.model);
  io::write_trace(cfg.out_dir / "trace.csv", result.steps);
  std::printf("train-toy: %zu steps, first epoch loss %.6f, last %.6f\n",
              result.steps.size(), result.epoch_mean_loss.front(),
              result.epoch_mean_loss.back());
  return 0;
}

int cmd_evaluate(const CommonArgs& args, const std::string& checkpoint_file,
                 const std::string& queries_file,
                 const std::string& pairs_file,
                 const std::string& query_features_file,
                 const std::string& tile_features_file) {
  const auto cfg = load_config(args);
  require_exists(cfg.pyramid_config, "pyramid config");
  const auto pyramid = io::read_pyramid_config(cfg.pyramid_config);

  const fs::path ckpt_path = checkpoint_file.empty()
                                 ? cfg.out_dir / "checkpoint.bin"
                                 : fs::path(checkpoint_file);
  fs::path queries_path = queries_file.empty()
                              ? cfg.out_dir / "test_queries.jsonl"
                              : fs::path(queries_file);
  if (queries_file.empty() && !fs::exists(queries_path))
    queries_path = cfg.out_dir / "queries.jsonl";
  fs::path pairs_path = pairs_file.empty() ? cfg.out_dir / "test_pairs.jsonl"
                                           : fs::path(pairs_file);
  if (pairs_file.empty() && !fs::exists(pairs_path))
    pairs_path = cfg.out_dir / "pairs.jsonl";
  require_exists(ckpt_path, "checkpoint");
  require_exists(queries_path, "query file");
  require_exists(pairs_path, "pair manifest");

  const auto model = io::read_checkpoint(ckpt_path);
  const auto queries = io::read_queries(queries_path);
  const auto manifest = io::read_pair_manifest(pairs_path);
  const auto features = load_features(
      query_features_file.empty() ? cfg.out_dir / "query_features.bin"
                                  : fs::path(query_features_file),
      tile_features_file.empty() ? cfg.out_dir / "tile_features.bin"
                                 : fs::path(tile_features_file));

  // reference set: every tile with a feature vector, embedded offline
  std::vector<TileId> tile_ids;
  std::vector<GeoPoint> centers;
  Eigen::MatrixXd tile_inputs(features.tiles.size(), features.dim());
  Eigen::Index row = 0;
  for (const auto& [id, f] : features.tiles) {
    tile_ids.push_back(id);
    centers.push_back(tile_center(pyramid, id));
    tile_inputs.row(row++) = f.cast<double>();
  }
  const Eigen::MatrixXf tile_embeddings =
      model.embed(tile_inputs, /*ref_side=*/true).cast<float>();
  const RetrievalIndex index(tile_ids, tile_embeddings, centers);

  // positive tiles per query (semi-positives are not retrieval truth)
  std::map<std::string, std::vector<TileId>> truth;
  for (const auto& p : manifest.pairs)
    if (p.label == PairLabel::kPositive)
      truth[p.query_id].push_back(p.tile);

  std::vector<EvalQuery> eval_queries;
  for (const auto& q : queries) {
    EvalQuery eq;
    eq.query_id = q.query_id;
    Eigen::MatrixXd input(1, features.dim());
    input.row(0) = features.query_feature(q.query_id).cast<double>();
    eq.embedding = model.embed(input, /*ref_side=*/false)
                       .row(0)
                       .cast<float>();
    eq.location = q.pose.ground_point;
    if (const auto it = truth.find(q.query_id); it != truth.end())
      eq.positives = it->second;
    eval_queries.push_back(std::move(eq));
  }

  const auto report = evaluate(index, eval_queries, cfg.eval.recall_ks,
                               cfg.eval.sdm_k, cfg.eval.sdm_scale);
  io::write_metrics(cfg.out_dir / "metrics.json", report);
  std::printf("evaluate: %d queries, R@1 %.4f, AP %.4f, Dis@1 %.2f m\n",
              report.n_queries,
              report.recall_at.count(1) ? report.recall_at.at(1) : 0.0,
              report.ap, report.dis_at_1);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"skyloc: partial-matching UAV geo-localization toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string queries_file, pairs_file, checkpoint_file;
  std::string query_features_file, tile_features_file;

  auto* synth = app.add_subcommand(
      "synth-world", "generate a synthetic dataset from a world config");
  add_common_options(synth, args);

  auto* build = app.add_subcommand(
      "build-pairs", "build the positive/semi-positive pair manifest");
  add_common_options(build, args);
  build->add_option("--queries", queries_file, "query records (JSONL)");

  auto* split = app.add_subcommand(
      "split", "split queries and pairs into train/test sets");
  add_common_options(split, args);
  split->add_option("--queries", queries_file, "query records (JSONL)");
  split->add_option("--pairs", pairs_file, "pair manifest (JSONL)");

  auto* sample = app.add_subcommand(
      "sample-batches", "write one epoch of mutually exclusive batches");
  add_common_options(sample, args);
  sample->add_option("--pairs", pairs_file, "pair manifest (JSONL)");

  auto* train_cmd = app.add_subcommand(
      "train-toy", "train the toy embedding model on pair data");
  add_common_options(train_cmd, args);
  train_cmd->add_option("--pairs", pairs_file, "pair manifest (JSONL)");
  train_cmd->add_option("--query-features", query_features_file,
                        "query feature file");
  train_cmd->add_option("--tile-features", tile_features_file,
                        "tile feature file");

  auto* eval_cmd = app.add_subcommand(
      "evaluate", "retrieval + localization metrics for a checkpoint");
  add_common_options(eval_cmd, args);
  eval_cmd->add_option("--checkpoint", checkpoint_file, "model checkpoint");
  eval_cmd->add_option("--queries", queries_file, "query records (JSONL)");
  eval_cmd->add_option("--pairs", pairs_file,
                       "pair manifest holding retrieval truth");
  eval_cmd->add_option("--query-features", query_features_file,
                       "query feature file");
  eval_cmd->add_option("--tile-features", tile_features_file,
                       "tile feature file");

  try {
    app.parse(argc, argv);
    if (synth->parsed()) return cmd_synth_world(args);
    if (build->parsed()) return cmd_build_pairs(args, queries_file);
    if (split->parsed()) return cmd_split(args, queries_file, pairs_file);
    if (sample->parsed()) return cmd_sample_batches(args, pairs_file);
    if (train_cmd->parsed())
      return cmd_train_toy(args, pairs_file, query_features_file,
                           tile_features_file);
    if (eval_cmd->parsed())
      return cmd_evaluate(args, checkpoint_file, queries_file, pairs_file,
                          query_features_file, tile_features_file);
    return 1;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "{\"error\":\"UsageError\",\"message\":\""
              << io::json_escape(e.what()) << "\"}\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "{\"error\":\"" << e.code() << "\",\"message\":\""
              << io::json_escape(e.what()) << "\"}\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "{\"error\":\"InternalError\",\"message\":\""
              << io::json_escape(e.what()) << "\"}\n";
    return 1;
  }
}
