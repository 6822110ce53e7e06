#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "skyloc/errors.hpp"
#include "skyloc/geometry.hpp"
#include "skyloc/tilemap.hpp"

namespace skyloc {

// Immutable reference set: unit-norm embeddings plus tile geo centers.
// Similarities are accumulated in double so rankings are reproducible and
// independent of SIMD width.
class RetrievalIndex {
 public:
  RetrievalIndex(std::vector<TileId> ids, Eigen::MatrixXf embeddings,
                 std::vector<GeoPoint> centers)
      : ids_(std::move(ids)), centers_(std::move(centers)) {
    if (static_cast<Eigen::Index>(ids_.size()) != embeddings.rows() ||
        ids_.size() != centers_.size())
      throw ShapeError("index ids, embeddings and centers must align");
    embeddings_ = embeddings.cast<double>();
    for (Eigen::Index i = 0; i < embeddings_.rows(); ++i) {
      const double norm = embeddings_.row(i).norm();
      if (!(norm > 1e-12))
        throw DomainError("index embedding with zero norm");
      if (std::abs(norm - 1.0) > 1e-3)
        throw DomainError("index embeddings must be unit-norm");
      embeddings_.row(i) /= norm;
    }
  }

  std::size_t size() const { return ids_.size(); }
  const std::vector<TileId>& ids() const { return ids_; }
  const std::vector<GeoPoint>& centers() const { return centers_; }
  const Eigen::MatrixXd& embeddings() const { return embeddings_; }

 private:
  std::vector<TileId> ids_;
  Eigen::MatrixXd embeddings_;
  std::vector<GeoPoint> centers_;
};

struct ScoredTile {
  TileId tile;
  double similarity = 0.0;
};

namespace detail {

inline Eigen::VectorXd index_similarities(const RetrievalIndex& index,
                                          const Eigen::VectorXf& query) {
  if (index.size() == 0) throw EmptyIndexError("retrieval index is empty");
  if (query.size() != index.embeddings().cols())
    throw ShapeError("query embedding dimension does not match the index");
  return index.embeddings() * query.cast<double>();
}

// Strict weak order shared by top_k and the rank counting: similarity
// descending, tile sort key ascending.
inline bool ranks_before(double sim_a, const TileId& a, double sim_b,
                         const TileId& b) {
  if (sim_a != sim_b) return sim_a > sim_b;
  return a < b;
}

}  // namespace detail

/// Exact top-K by dot product; K larger than the index returns the full
/// ranking. Ties break on the tile sort key.
inline std::vector<ScoredTile> top_k(const RetrievalIndex& index,
                                     const Eigen::VectorXf& query, int k) {
  if (k < 1) throw DomainError("top_k requires K >= 1");
  const Eigen::VectorXd sims = detail::index_similarities(index, query);
  std::vector<std::size_t> order(index.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const auto cmp = [&](std::size_t a, std::size_t b) {
    return detail::ranks_before(sims(static_cast<Eigen::Index>(a)),
                                index.ids()[a],
                                sims(static_cast<Eigen::Index>(b)),
                                index.ids()[b]);
  };
  const std::size_t take = std::min<std::size_t>(k, order.size());
  std::partial_sort(order.begin(), order.begin() + take, order.end(), cmp);
  std::vector<ScoredTile> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i)
    out.push_back({index.ids()[order[i]],
                   sims(static_cast<Eigen::Index>(order[i]))});
  return out;
}

/// 1-based rank each listed tile would take in the full ranking for this
/// query; consistent with top_k tie-breaking.
inline std::vector<std::size_t> ranks_of(const RetrievalIndex& index,
                                         const Eigen::VectorXf& query,
                                         const std::vector<TileId>& tiles) {
  const Eigen::VectorXd sims = detail::index_similarities(index, query);
  std::map<TileId, std::size_t> position;
  for (std::size_t i = 0; i < index.size(); ++i)
    position.emplace(index.ids()[i], i);

  std::vector<std::size_t> ranks;
  ranks.reserve(tiles.size());
  for (const TileId& t : tiles) {
    const auto it = position.find(t);
    if (it == position.end())
      throw MissingTruthError("tile " + to_string(t) + " not in the index");
    const double sim = sims(static_cast<Eigen::Index>(it->second));
    std::size_t rank = 1;
    for (std::size_t j = 0; j < index.size(); ++j) {
      if (j == it->second) continue;
      if (detail::ranks_before(sims(static_cast<Eigen::Index>(j)),
                               index.ids()[j], sim, t))
        ++rank;
    }
    ranks.push_back(rank);
  }
  return ranks;
}

// Per-query ranked tiles (descending similarity) and ground-truth positive
// tiles; the inputs to the metric formulas.
struct QueryRanking {
  std::vector<TileId> ranked;           // best first
  std::vector<std::size_t> positive_ranks;  // 1-based, ascending
  GeoPoint location;
};

struct MetricsReport {
  std::map<int, double> recall_at;
  double ap = 0.0;
  std::map<int, double> sdm_at;
  double sdm_scale = 100.0;
  double dis_at_1 = 0.0;
  int n_queries = 0;
  int n_without_truth = 0;  // queries dropped for having no positive tile
};

/// Fraction of queries with at least one positive in the top K.
inline double recall_at_k(const std::vector<QueryRanking>& rankings, int k) {
  if (k < 1) throw DomainError("recall requires K >= 1");
  if (rankings.empty()) throw MissingTruthError("no queries to evaluate");
  int hits = 0;
  for (const auto& r : rankings) {
    if (r.positive_ranks.empty())
      throw MissingTruthError("query without ground-truth positives");
    hits += r.positive_ranks.front() <= static_cast<std::size_t>(k);
  }
  return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

/// Mean over queries of the mean precision at each positive's rank.
inline double average_precision(const std::vector<QueryRanking>& rankings) {
  if (rankings.empty()) throw MissingTruthError("no queries to evaluate");
  double total = 0.0;
  for (const auto& r : rankings) {
    if (r.positive_ranks.empty())
      throw MissingTruthError("query without ground-truth positives");
    double ap = 0.0;
    for (std::size_t j = 0; j < r.positive_ranks.size(); ++j)
      ap += static_cast<double>(j + 1) /
            static_cast<double>(r.positive_ranks[j]);
    total += ap / static_cast<double>(r.positive_ranks.size());
  }
  return total / static_cast<double>(rankings.size());
}

/// Rank-weighted, distance-decayed localization score:
/// mean_q sum_i w_i exp(-d_i / s) / sum_i w_i with w_i = K - i + 1.
inline double sdm_at_k(const std::vector<QueryRanking>& rankings,
                       const std::map<TileId, GeoPoint>& centers, int k,
                       double scale) {
  if (!(scale > 0.0)) throw DomainError("sdm decay scale must be positive");
  if (k < 1) throw DomainError("sdm requires K >= 1");
  if (rankings.empty()) throw MissingTruthError("no queries to evaluate");
  double total = 0.0;
  for (const auto& r : rankings) {
    const std::size_t m =
        std::min<std::size_t>(k, r.ranked.size());
    if (m == 0) throw EmptyIndexError("ranking is empty");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double w = static_cast<double>(k - i);
      const auto it = centers.find(r.ranked[i]);
      if (it == centers.end())
        throw MissingTruthError("no geo center for tile " +
                                to_string(r.ranked[i]));
      const double d = distance(r.location, it->second);
      num += w * std::exp(-d / scale);
      den += w;
    }
    total += num / den;
  }
  return total / static_cast<double>(rankings.size());
}

/// Mean ground distance between each query and its top-1 tile center.
inline double dis_at_1(const std::vector<QueryRanking>& rankings,
                       const std::map<TileId, GeoPoint>& centers) {
  if (rankings.empty()) throw EmptyIndexError("no queries to evaluate");
  double total = 0.0;
  for (const auto& r : rankings) {
    if (r.ranked.empty()) throw EmptyIndexError("ranking is empty");
    const auto it = centers.find(r.ranked.front());
    if (it == centers.end())
      throw MissingTruthError("no geo center for tile " +
                              to_string(r.ranked.front()));
    total += distance(r.location, it->second);
  }
  return total / static_cast<double>(rankings.size());
}

struct EvalQuery {
  std::string query_id;
  Eigen::VectorXf embedding;
  GeoPoint location;
  std::vector<TileId> positives;  // ground-truth positive tiles
};

/// Ranks every query against the index and assembles all metrics. Queries
/// without any positive tile are excluded from every metric and counted in
/// the report.
inline MetricsReport evaluate(const RetrievalIndex& index,
                              const std::vector<EvalQuery>& queries,
                              const std::vector<int>& recall_ks, int sdm_k,
                              double sdm_scale) {
  if (index.size() == 0) throw EmptyIndexError("retrieval index is empty");
  std::map<TileId, GeoPoint> centers;
  for (std::size_t i = 0; i < index.size(); ++i)
    centers.emplace(index.ids()[i], index.centers()[i]);

  int max_k = sdm_k;
  for (int k : recall_ks) max_k = std::max(max_k, k);

  MetricsReport report;
  report.sdm_scale = sdm_scale;
  std::vector<QueryRanking> rankings;
  for (const auto& q : queries) {
    if (q.positives.empty()) {
      ++report.n_without_truth;
      continue;
    }
    QueryRanking r;
    r.location = q.location;
    for (const auto& scored : top_k(index, q.embedding, max_k))
      r.ranked.push_back(scored.tile);
    r.positive_ranks = ranks_of(index, q.embedding, q.positives);
    std::sort(r.positive_ranks.begin(), r.positive_ranks.end());
    rankings.push_back(std::move(r));
  }
  if (rankings.empty())
    throw MissingTruthError("no query has ground-truth positives");

  report.n_queries = static_cast<int>(rankings.size());
  for (int k : recall_ks) report.recall_at[k] = recall_at_k(rankings, k);
  report.ap = average_precision(rankings);
  report.sdm_at[sdm_k] = sdm_at_k(rankings, centers, sdm_k, sdm_scale);
  report.dis_at_1 = dis_at_1(rankings, centers);
  return report;
}

}  // namespace skyloc
