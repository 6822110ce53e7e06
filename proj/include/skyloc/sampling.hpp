#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "skyloc/errors.hpp"
#include "skyloc/pairing.hpp"
#include "skyloc/rng.hpp"

namespace skyloc {

enum class DataMode { kPositiveOnly, kPositiveSemi };

// Bipartite query/tile graph over pair records. Node indices are assigned
// in first-appearance order of the (deterministically ordered) edge list.
struct PairGraph {
  struct Edge {
    std::size_t query = 0;  // index into query_ids
    std::size_t tile = 0;   // index into tile_ids
    double iou = 0.0;
  };

  std::vector<std::string> query_ids;
  std::vector<TileId> tile_ids;
  std::vector<Edge> edges;
  std::vector<std::vector<std::size_t>> edges_of_query;  // edge indices
  std::vector<std::vector<std::size_t>> edges_of_tile;

  static PairGraph from_pairs(const std::vector<PairRecord>& pairs,
                              DataMode mode = DataMode::kPositiveSemi) {
    PairGraph g;
    std::unordered_map<std::string, std::size_t> query_index;
    std::map<TileId, std::size_t> tile_index;
    std::unordered_set<std::string> seen_edges;
    for (const auto& p : pairs) {
      if (mode == DataMode::kPositiveOnly && p.label != PairLabel::kPositive)
        continue;
      const std::string edge_key = p.query_id + "|" + to_string(p.tile);
      if (!seen_edges.insert(edge_key).second)
        throw DomainError("duplicate pair edge: " + edge_key);
      auto [qit, q_new] =
          query_index.try_emplace(p.query_id, g.query_ids.size());
      if (q_new) {
        g.query_ids.push_back(p.query_id);
        g.edges_of_query.emplace_back();
      }
      auto [tit, t_new] = tile_index.try_emplace(p.tile, g.tile_ids.size());
      if (t_new) {
        g.tile_ids.push_back(p.tile);
        g.edges_of_tile.emplace_back();
      }
      const std::size_t edge_idx = g.edges.size();
      g.edges.push_back({qit->second, tit->second, p.iou_value});
      g.edges_of_query[qit->second].push_back(edge_idx);
      g.edges_of_tile[tit->second].push_back(edge_idx);
    }
    return g;
  }
};

struct BatchPair {
  std::string query_id;
  TileId tile;
  double iou = 0.0;
};

using Batch = std::vector<BatchPair>;

namespace detail {

// One epoch of mutually exclusive sampling over the pair graph.
//
// Per batch, edges are visited in a fresh seeded shuffle of the edges not
// yet consumed this epoch; an edge is taken when it conflicts with nothing
// already in the batch. Taking (q, r) prunes every other edge at q and at r
// for the rest of the batch; pruned-but-unselected edges come back for the
// next batch, selected edges stay consumed for the whole epoch. In strict
// mode an edge is also rejected when the graph connects its query to an
// already-selected reference or its reference to an already-selected query,
// so batch nodes carry no cross edges at all.
inline std::vector<Batch> sample_epoch_impl(const PairGraph& g,
                                            std::size_t batch_size,
                                            std::uint64_t seed, bool strict) {
  if (batch_size < 2) throw DomainError("batch size must be at least 2");
  if (g.edges.empty())
    throw InsufficientEdgesError("pair graph has no edges");

  StreamRng rng(seed, {0x6d6573ULL});  // sampling stream
  std::vector<bool> consumed(g.edges.size(), false);
  std::size_t remaining = g.edges.size();

  std::vector<Batch> batches;
  std::vector<std::size_t> pool;
  std::vector<char> query_used(g.query_ids.size(), 0);
  std::vector<char> tile_used(g.tile_ids.size(), 0);

  while (remaining >= batch_size) {
    pool.clear();
    for (std::size_t e = 0; e < g.edges.size(); ++e)
      if (!consumed[e]) pool.push_back(e);
    shuffle(pool, rng);

    std::fill(query_used.begin(), query_used.end(), 0);
    std::fill(tile_used.begin(), tile_used.end(), 0);
    std::vector<std::size_t> selected;
    for (std::size_t e : pool) {
      const auto& edge = g.edges[e];
      if (query_used[edge.query] || tile_used[edge.tile]) continue;
      if (strict) {
        bool conflict = false;
        for (std::size_t adj : g.edges_of_query[edge.query])
          conflict = conflict || tile_used[g.edges[adj].tile];
        for (std::size_t adj : g.edges_of_tile[edge.tile])
          conflict = conflict || query_used[g.edges[adj].query];
        if (conflict) continue;
      }
      selected.push_back(e);
      query_used[edge.query] = 1;
      tile_used[edge.tile] = 1;
      if (selected.size() == batch_size) break;
    }
    if (selected.size() < batch_size) break;

    Batch batch;
    batch.reserve(batch_size);
    for (std::size_t e : selected) {
      consumed[e] = true;
      --remaining;
      const auto& edge = g.edges[e];
      batch.push_back(
          {g.query_ids[edge.query], g.tile_ids[edge.tile], edge.iou});
    }
    batches.push_back(std::move(batch));
  }

  if (batches.empty())
    throw InsufficientEdgesError(
        "no full batch of size " + std::to_string(batch_size) +
        " can be formed from the pair graph");
  return batches;
}

}  // namespace detail

/// Node-disjoint batches per the printed sampling procedure (selected edges
/// consumed for the epoch; trailing incomplete batch dropped).
inline std::vector<Batch> sample_epoch(const PairGraph& g,
                                       std::size_t batch_size,
                                       std::uint64_t seed) {
  return detail::sample_epoch_impl(g, batch_size, seed, /*strict=*/false);
}

/// As sample_epoch, plus: no graph edge connects any selected query to any
/// selected reference across different pairs of the same batch.
inline std::vector<Batch> strict_sample_epoch(const PairGraph& g,
                                              std::size_t batch_size,
                                              std::uint64_t seed) {
  return detail::sample_epoch_impl(g, batch_size, seed, /*strict=*/true);
}

}  // namespace skyloc
