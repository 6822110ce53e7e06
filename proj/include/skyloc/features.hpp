#pragma once

#include <map>
#include <string>

#include <Eigen/Dense>

#include "skyloc/errors.hpp"
#include "skyloc/tilemap.hpp"

namespace skyloc {

// Input feature vectors for both views, keyed by query id / tile id.
// Components are 32-bit floats so that in-memory values round-trip the
// binary feature files exactly.
struct FeatureSet {
  std::map<std::string, Eigen::VectorXf> queries;
  std::map<TileId, Eigen::VectorXf> tiles;

  int dim() const {
    if (!queries.empty()) return static_cast<int>(queries.begin()->second.size());
    if (!tiles.empty()) return static_cast<int>(tiles.begin()->second.size());
    return 0;
  }

  const Eigen::VectorXf& query_feature(const std::string& id) const {
    const auto it = queries.find(id);
    if (it == queries.end())
      throw DomainError("missing feature vector for query " + id);
    return it->second;
  }

  const Eigen::VectorXf& tile_feature(const TileId& t) const {
    const auto it = tiles.find(t);
    if (it == tiles.end())
      throw DomainError("missing feature vector for tile " + to_string(t));
    return it->second;
  }
};

inline void validate(const FeatureSet& features) {
  const int d = features.dim();
  if (d <= 0) throw ShapeError("feature set is empty");
  for (const auto& [id, f] : features.queries)
    if (f.size() != d)
      throw ShapeError("feature dimension mismatch for query " + id);
  for (const auto& [id, f] : features.tiles)
    if (f.size() != d)
      throw ShapeError("feature dimension mismatch for tile " + to_string(id));
}

}  // namespace skyloc
