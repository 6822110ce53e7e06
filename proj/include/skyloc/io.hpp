#pragma once

// File formats. All writers emit byte-identical output for identical inputs:
// text files are assembled with explicit formatting (no locale, no
// timestamps), binary files are little-endian with fixed layouts.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "skyloc/errors.hpp"
#include "skyloc/features.hpp"
#include "skyloc/pairing.hpp"
#include "skyloc/retrieval.hpp"
#include "skyloc/sampling.hpp"
#include "skyloc/tilemap.hpp"
#include "skyloc/trainer.hpp"
#include "skyloc/version.hpp"

namespace skyloc {
namespace io {

// ---------------------------------------------------------------------------
// formatting helpers

/// Shortest representation that round-trips the exact double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Fixed decimals (manifest IOUs, metric values).
inline std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return std::string(buf);
}

inline std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open for writing: " + path.string());
  out.write(content.data(),
            static_cast<std::streamsize>(content.size()));
  if (!out) throw FormatError("failed writing " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open for reading: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline nlohmann::json parse_json(const std::string& text,
                                 const std::string& context) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(context + ": " + e.what());
  }
}

inline void expect_format(const nlohmann::json& header,
                          const std::string& format, int version,
                          const std::string& context) {
  if (!header.contains("format") || header["format"] != format)
    throw FormatError(context + ": expected format '" + format + "'");
  if (!header.contains("version") ||
      header["version"].get<int>() != version)
    throw FormatError(context + ": unsupported version");
}

inline std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    if (end > start) lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

// ---------------------------------------------------------------------------
// little-endian binary primitives

inline void put_u8(std::string& out, std::uint8_t v) {
  out.push_back(static_cast<char>(v));
}
inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}
inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i)
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  put_u32(out, bits);
}

class BinaryReader {
 public:
  explicit BinaryReader(std::string data, std::string context)
      : data_(std::move(data)), context_(std::move(context)) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint16_t u16() {
    const auto* p = take(2);
    return static_cast<std::uint16_t>(
        (static_cast<unsigned char>(p[0])) |
        (static_cast<unsigned char>(p[1]) << 8));
  }
  std::uint32_t u32() {
    const auto* p = take(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i)
      v = (v << 8) | static_cast<unsigned char>(p[i]);
    return v;
  }
  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }
  std::string bytes(std::size_t n) { return std::string(take(n), n); }
  void expect_magic(const char (&magic)[5]) {
    if (bytes(4) != std::string(magic, 4))
      throw FormatError(context_ + ": bad magic, unsupported file");
  }
  bool exhausted() const { return pos_ == data_.size(); }

 private:
  const char* take(std::size_t n) {
    if (pos_ + n > data_.size())
      throw FormatError(context_ + ": truncated file");
    const char* p = data_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::string data_;
  std::string context_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// pair manifest (JSON lines; header then one record per line)

struct PairManifest {
  PairingConfig config;
  std::vector<SkippedQuery> skipped;
  std::vector<PairRecord> pairs;
};

inline std::string write_pair_manifest_text(const PairManifest& manifest) {
  std::string out;
  out += "{\"format\":\"skyloc-pairs\",\"version\":1,\"toolkit\":\"";
  out += SKYLOC_VERSION_STRING;
  out += "\",\"t_pos\":" + format_double(manifest.config.t_pos);
  out += ",\"t_semi\":" + format_double(manifest.config.t_semi);
  out += ",\"min_level\":" + std::to_string(manifest.config.min_level);
  out += ",\"max_level\":" + std::to_string(manifest.config.max_level);
  out +=
      ",\"tie_rule\":\"positive iff iou>t_pos; semi-positive iff "
      "t_semi<iou<=t_pos\"";
  out += ",\"skipped\":[";
  for (std::size_t i = 0; i < manifest.skipped.size(); ++i) {
    if (i) out += ",";
    out += "\"" + json_escape(manifest.skipped[i].query_id) + "\"";
  }
  out += "]}\n";
  for (const auto& p : manifest.pairs) {
    out += "{\"query_id\":\"" + json_escape(p.query_id) + "\"";
    out += ",\"level\":" + std::to_string(p.tile.level);
    out += ",\"x\":" + std::to_string(p.tile.x);
    out += ",\"y\":" + std::to_string(p.tile.y);
    out += ",\"iou\":" + format_fixed(p.iou_value, 6);
    out += ",\"label\":\"";
    out += to_string(p.label);
    out += "\"}\n";
  }
  return out;
}

inline void write_pair_manifest(const std::filesystem::path& path,
                                const PairManifest& manifest) {
  write_text_file(path, write_pair_manifest_text(manifest));
}

inline PairManifest read_pair_manifest(const std::filesystem::path& path) {
  const auto lines = split_lines(read_text_file(path));
  if (lines.empty()) throw FormatError(path.string() + ": empty manifest");
  const auto header = parse_json(lines[0], path.string());
  expect_format(header, "skyloc-pairs", 1, path.string());

  PairManifest manifest;
  manifest.config.t_pos = header.at("t_pos").get<double>();
  manifest.config.t_semi = header.at("t_semi").get<double>();
  manifest.config.min_level = header.at("min_level").get<int>();
  manifest.config.max_level = header.at("max_level").get<int>();
  for (const auto& id : header.at("skipped"))
    manifest.skipped.push_back({id.get<std::string>(), ""});

  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto row = parse_json(lines[i], path.string());
    PairRecord record;
    record.query_id = row.at("query_id").get<std::string>();
    record.tile = {row.at("level").get<int>(),
                   row.at("x").get<std::int64_t>(),
                   row.at("y").get<std::int64_t>()};
    record.iou_value = row.at("iou").get<double>();
    const std::string label = row.at("label").get<std::string>();
    if (label == "positive")
      record.label = PairLabel::kPositive;
    else if (label == "semi-positive")
      record.label = PairLabel::kSemiPositive;
    else
      throw FormatError(path.string() + ": unknown label '" + label + "'");
    manifest.pairs.push_back(std::move(record));
  }
  return manifest;
}

// ---------------------------------------------------------------------------
// query records (JSON lines)

inline std::string write_queries_text(
    const std::vector<QueryRecord>& queries) {
  std::string out;
  out += "{\"format\":\"skyloc-queries\",\"version\":1,\"count\":" +
         std::to_string(queries.size()) + "}\n";
  for (const auto& q : queries) {
    out += "{\"query_id\":\"" + json_escape(q.query_id) + "\"";
    out += ",\"x\":" + format_double(q.pose.ground_point.x_east);
    out += ",\"y\":" + format_double(q.pose.ground_point.y_north);
    out += ",\"altitude\":" + format_double(q.pose.altitude);
    out += ",\"roll\":" + format_double(q.pose.roll_deg);
    out += ",\"pitch\":" + format_double(q.pose.pitch_deg);
    out += ",\"yaw\":" + format_double(q.pose.yaw_deg);
    out += ",\"hfov\":" + format_double(q.intr.hfov_deg);
    out += ",\"vfov\":" + format_double(q.intr.vfov_deg);
    out += "}\n";
  }
  return out;
}

inline void write_queries(const std::filesystem::path& path,
                          const std::vector<QueryRecord>& queries) {
  write_text_file(path, write_queries_text(queries));
}

inline std::vector<QueryRecord> read_queries(
    const std::filesystem::path& path) {
  const auto lines = split_lines(read_text_file(path));
  if (lines.empty()) throw FormatError(path.string() + ": empty query file");
  const auto header = parse_json(lines[0], path.string());
  expect_format(header, "skyloc-queries", 1, path.string());

  std::vector<QueryRecord> queries;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto row = parse_json(lines[i], path.string());
    QueryRecord q;
    q.query_id = row.at("query_id").get<std::string>();
    q.pose.ground_point = {row.at("x").get<double>(),
                           row.at("y").get<double>()};
    q.pose.altitude = row.at("altitude").get<double>();
    q.pose.roll_deg = row.at("roll").get<double>();
    q.pose.pitch_deg = row.at("pitch").get<double>();
    q.pose.yaw_deg = row.at("yaw").get<double>();
    q.pose = normalized(q.pose);
    q.intr.hfov_deg = row.at("hfov").get<double>();
    q.intr.vfov_deg = row.at("vfov").get<double>();
    queries.push_back(std::move(q));
  }
  if (queries.size() != header.at("count").get<std::size_t>())
    throw FormatError(path.string() + ": row count mismatch");
  return queries;
}

// ---------------------------------------------------------------------------
// batch schedule (header line, then "query_id:level/x/y" pairs per line)

struct BatchSchedule {
  int batch_size = 0;
  std::uint64_t seed = 0;
  bool strict = false;
  DataMode mode = DataMode::kPositiveSemi;
  std::vector<Batch> batches;
};

inline const char* to_string(DataMode mode) {
  return mode == DataMode::kPositiveOnly ? "positive-only" : "positive-semi";
}

inline DataMode data_mode_from_string(const std::string& s) {
  if (s == "positive-only") return DataMode::kPositiveOnly;
  if (s == "positive-semi") return DataMode::kPositiveSemi;
  throw FormatError("unknown data mode '" + s + "'");
}

inline std::string write_schedule_text(const BatchSchedule& schedule) {
  std::string out;
  out += "{\"format\":\"skyloc-schedule\",\"version\":1,\"batch_size\":" +
         std::to_string(schedule.batch_size);
  out += ",\"seed\":" + std::to_string(schedule.seed);
  out += ",\"strict\":";
  out += schedule.strict ? "true" : "false";
  out += ",\"mode\":\"";
  out += to_string(schedule.mode);
  out += "\"}\n";
  for (const auto& batch : schedule.batches) {
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (i) out += " ";
      out += batch[i].query_id + ":" + skyloc::to_string(batch[i].tile);
    }
    out += "\n";
  }
  return out;
}

inline void write_schedule(const std::filesystem::path& path,
                           const BatchSchedule& schedule) {
  write_text_file(path, write_schedule_text(schedule));
}

inline BatchSchedule read_schedule(const std::filesystem::path& path) {
  const auto lines = split_lines(read_text_file(path));
  if (lines.empty()) throw FormatError(path.string() + ": empty schedule");
  const auto header = parse_json(lines[0], path.string());
  expect_format(header, "skyloc-schedule", 1, path.string());

  BatchSchedule schedule;
  schedule.batch_size = header.at("batch_size").get<int>();
  schedule.seed = header.at("seed").get<std::uint64_t>();
  schedule.strict = header.at("strict").get<bool>();
  schedule.mode =
      data_mode_from_string(header.at("mode").get<std::string>());

  for (std::size_t i = 1; i < lines.size(); ++i) {
    Batch batch;
    std::istringstream ss(lines[i]);
    std::string token;
    while (ss >> token) {
      const auto colon = token.find(':');
      if (colon == std::string::npos)
        throw FormatError(path.string() + ": malformed schedule entry");
      BatchPair pair;
      pair.query_id = token.substr(0, colon);
      const std::string tile = token.substr(colon + 1);
      int level;
      long long x, y;
      if (std::sscanf(tile.c_str(), "%d/%lld/%lld", &level, &x, &y) != 3)
        throw FormatError(path.string() + ": malformed tile id '" + tile +
                          "'");
      pair.tile = {level, x, y};
      batch.push_back(std::move(pair));
    }
    if (!batch.empty()) schedule.batches.push_back(std::move(batch));
  }
  return schedule;
}

// ---------------------------------------------------------------------------
// model checkpoint: magic "SKL1", u32 input_dim, u32 embed_dim, u8 shared,
// then row-major f32 weights/biases (query side, then reference side when
// not shared), then f32 tau. Little-endian throughout.

inline std::string write_checkpoint_bytes(const EmbedModel& model) {
  std::string out;
  out += "SKL1";
  put_u32(out, static_cast<std::uint32_t>(model.input_dim));
  put_u32(out, static_cast<std::uint32_t>(model.embed_dim));
  put_u8(out, model.shared ? 1 : 0);
  auto put_matrix = [&out](const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        put_f32(out, static_cast<float>(m(i, j)));
  };
  auto put_vector = [&out](const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i)
      put_f32(out, static_cast<float>(v(i)));
  };
  put_matrix(model.w_query);
  put_vector(model.b_query);
  if (!model.shared) {
    put_matrix(model.w_ref);
    put_vector(model.b_ref);
  }
  put_f32(out, static_cast<float>(model.tau));
  return out;
}

inline void write_checkpoint(const std::filesystem::path& path,
                             const EmbedModel& model) {
  write_text_file(path, write_checkpoint_bytes(model));
}

inline EmbedModel read_checkpoint(const std::filesystem::path& path) {
  BinaryReader in(read_text_file(path), path.string());
  in.expect_magic("SKL1");
  EmbedModel model;
  model.input_dim = static_cast<int>(in.u32());
  model.embed_dim = static_cast<int>(in.u32());
  model.shared = in.u8() != 0;
  auto take_matrix = [&in](int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = in.f32();
    return m;
  };
  model.w_query = take_matrix(model.embed_dim, model.input_dim);
  model.b_query = take_matrix(model.embed_dim, 1).col(0);
  if (!model.shared) {
    model.w_ref = take_matrix(model.embed_dim, model.input_dim);
    model.b_ref = take_matrix(model.embed_dim, 1).col(0);
  }
  model.tau = in.f32();
  if (!in.exhausted())
    throw FormatError(path.string() + ": trailing bytes in checkpoint");
  return model;
}

// ---------------------------------------------------------------------------
// embedding/feature files
//   tiles:   magic "SKLE", u32 count, u32 dim, count*dim f32, then per tile
//            (u8 level, u32 x, u32 y)
//   queries: magic "SKLQ", u32 count, u32 dim, count*dim f32, then per query
//            (u16 id length, id bytes)

inline std::string write_tile_vectors_bytes(
    const std::map<TileId, Eigen::VectorXf>& tiles) {
  std::string out;
  out += "SKLE";
  put_u32(out, static_cast<std::uint32_t>(tiles.size()));
  const std::uint32_t dim =
      tiles.empty() ? 0
                    : static_cast<std::uint32_t>(tiles.begin()->second.size());
  put_u32(out, dim);
  for (const auto& [id, f] : tiles) {
    if (static_cast<std::uint32_t>(f.size()) != dim)
      throw ShapeError("inconsistent tile vector dimensions");
    for (Eigen::Index i = 0; i < f.size(); ++i) put_f32(out, f(i));
  }
  for (const auto& [id, f] : tiles) {
    put_u8(out, static_cast<std::uint8_t>(id.level));
    put_u32(out, static_cast<std::uint32_t>(id.x));
    put_u32(out, static_cast<std::uint32_t>(id.y));
  }
  return out;
}

inline void write_tile_vectors(const std::filesystem::path& path,
                               const std::map<TileId, Eigen::VectorXf>& tiles) {
  write_text_file(path, write_tile_vectors_bytes(tiles));
}

inline std::map<TileId, Eigen::VectorXf> read_tile_vectors(
    const std::filesystem::path& path) {
  BinaryReader in(read_text_file(path), path.string());
  in.expect_magic("SKLE");
  const std::uint32_t count = in.u32();
  const std::uint32_t dim = in.u32();
  std::vector<Eigen::VectorXf> vectors;
  vectors.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Eigen::VectorXf f(dim);
    for (std::uint32_t j = 0; j < dim; ++j) f(j) = in.f32();
    vectors.push_back(std::move(f));
  }
  std::map<TileId, Eigen::VectorXf> tiles;
  for (std::uint32_t i = 0; i < count; ++i) {
    TileId id;
    id.level = in.u8();
    id.x = in.u32();
    id.y = in.u32();
    tiles[id] = std::move(vectors[i]);
  }
  if (!in.exhausted())
    throw FormatError(path.string() + ": trailing bytes");
  return tiles;
}

inline std::string write_query_vectors_bytes(
    const std::map<std::string, Eigen::VectorXf>& queries) {
  std::string out;
  out += "SKLQ";
  put_u32(out, static_cast<std::uint32_t>(queries.size()));
  const std::uint32_t dim =
      queries.empty()
          ? 0
          : static_cast<std::uint32_t>(queries.begin()->second.size());
  put_u32(out, dim);
  for (const auto& [id, f] : queries) {
    if (static_cast<std::uint32_t>(f.size()) != dim)
      throw ShapeError("inconsistent query vector dimensions");
    for (Eigen::Index i = 0; i < f.size(); ++i) put_f32(out, f(i));
  }
  for (const auto& [id, f] : queries) {
    if (id.size() > 0xffff) throw ShapeError("query id too long");
    put_u16(out, static_cast<std::uint16_t>(id.size()));
    out += id;
  }
  return out;
}

inline void write_query_vectors(
    const std::filesystem::path& path,
    const std::map<std::string, Eigen::VectorXf>& queries) {
  write_text_file(path, write_query_vectors_bytes(queries));
}

inline std::map<std::string, Eigen::VectorXf> read_query_vectors(
    const std::filesystem::path& path) {
  BinaryReader in(read_text_file(path), path.string());
  in.expect_magic("SKLQ");
  const std::uint32_t count = in.u32();
  const std::uint32_t dim = in.u32();
  std::vector<Eigen::VectorXf> vectors;
  vectors.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Eigen::VectorXf f(dim);
    for (std::uint32_t j = 0; j < dim; ++j) f(j) = in.f32();
    vectors.push_back(std::move(f));
  }
  std::map<std::string, Eigen::VectorXf> queries;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t len = in.u16();
    queries[in.bytes(len)] = std::move(vectors[i]);
  }
  if (!in.exhausted())
    throw FormatError(path.string() + ": trailing bytes");
  return queries;
}

// ---------------------------------------------------------------------------
// metrics report (single JSON object, fixed key order, 6 decimals)

inline std::string write_metrics_text(const MetricsReport& report) {
  std::string out;
  out += "{\"format\":\"skyloc-metrics\",\"version\":1";
  out += ",\"n_queries\":" + std::to_string(report.n_queries);
  out += ",\"n_without_truth\":" + std::to_string(report.n_without_truth);
  out += ",\"recall_at\":{";
  bool first = true;
  for (const auto& [k, v] : report.recall_at) {
    if (!first) out += ",";
    first = false;
    out += "\"" + std::to_string(k) + "\":" + format_fixed(v, 6);
  }
  out += "},\"ap\":" + format_fixed(report.ap, 6);
  out += ",\"sdm_at\":{";
  first = true;
  for (const auto& [k, v] : report.sdm_at) {
    if (!first) out += ",";
    first = false;
    out += "\"" + std::to_string(k) + "\":" + format_fixed(v, 6);
  }
  out += "},\"sdm_scale\":" + format_double(report.sdm_scale);
  out += ",\"dis_at_1\":" + format_fixed(report.dis_at_1, 6);
  out += "}\n";
  return out;
}

inline void write_metrics(const std::filesystem::path& path,
                          const MetricsReport& report) {
  write_text_file(path, write_metrics_text(report));
}

inline MetricsReport read_metrics(const std::filesystem::path& path) {
  const auto root = parse_json(read_text_file(path), path.string());
  expect_format(root, "skyloc-metrics", 1, path.string());
  MetricsReport report;
  report.n_queries = root.at("n_queries").get<int>();
  report.n_without_truth = root.at("n_without_truth").get<int>();
  for (const auto& [k, v] : root.at("recall_at").items())
    report.recall_at[std::stoi(k)] = v.get<double>();
  report.ap = root.at("ap").get<double>();
  for (const auto& [k, v] : root.at("sdm_at").items())
    report.sdm_at[std::stoi(k)] = v.get<double>();
  report.sdm_scale = root.at("sdm_scale").get<double>();
  report.dis_at_1 = root.at("dis_at_1").get<double>();
  return report;
}

// ---------------------------------------------------------------------------
// training trace (CSV)

inline std::string write_trace_text(const std::vector<StepRecord>& steps) {
  std::string out = "epoch,batch,lr,loss\n";
  for (const auto& s : steps) {
    out += std::to_string(s.epoch) + "," + std::to_string(s.batch) + "," +
           format_double(s.lr) + "," + format_double(s.loss) + "\n";
  }
  return out;
}

inline void write_trace(const std::filesystem::path& path,
                        const std::vector<StepRecord>& steps) {
  write_text_file(path, write_trace_text(steps));
}

}  // namespace io
}  // namespace skyloc
