// Independent reference implementations used to check the library. These are
// deliberately written from first principles and must not call back into the
// code paths they verify.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "skyloc/geometry.hpp"
#include "skyloc/tilemap.hpp"

#include <Eigen/Dense>

namespace oracles {

// ---------------------------------------------------------------------------
// Point-in-convex-polygon, written independently of skyloc::contains.
inline bool point_in_ccw_polygon(const std::vector<skyloc::GeoPoint>& poly,
                                 double px, double py) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % n];
    const double side = (b.x_east - a.x_east) * (py - a.y_north) -
                        (b.y_north - a.y_north) * (px - a.x_east);
    if (side < 0.0) return false;
  }
  return true;
}

// Midpoint-rule rasterization over an axis-aligned box: n_side^2 samples of
// an arbitrary inside-predicate. Deterministic; used as the area oracle.
inline double rasterized_area(
    const std::function<bool(double, double)>& inside, double min_x,
    double min_y, double max_x, double max_y, int n_side = 1000) {
  const double w = max_x - min_x;
  const double h = max_y - min_y;
  if (w <= 0.0 || h <= 0.0) return 0.0;
  const double dx = w / n_side;
  const double dy = h / n_side;
  std::int64_t hits = 0;
  for (int iy = 0; iy < n_side; ++iy) {
    const double py = min_y + (iy + 0.5) * dy;
    for (int ix = 0; ix < n_side; ++ix) {
      const double px = min_x + (ix + 0.5) * dx;
      if (inside(px, py)) ++hits;
    }
  }
  return static_cast<double>(hits) * dx * dy;
}

inline double rasterized_polygon_area(const skyloc::ConvexPolygon& poly,
                                      int n_side = 1000) {
  const auto box = skyloc::bounding_box(poly);
  const auto& v = poly.vertices();
  return rasterized_area(
      [&](double x, double y) { return point_in_ccw_polygon(v, x, y); },
      box.min_x, box.min_y, box.max_x, box.max_y, n_side);
}

inline double rasterized_intersection_area(const skyloc::ConvexPolygon& a,
                                           const skyloc::ConvexPolygon& b,
                                           int n_side = 1000) {
  const auto ba = skyloc::bounding_box(a);
  const auto bb = skyloc::bounding_box(b);
  const double min_x = std::max(ba.min_x, bb.min_x);
  const double min_y = std::max(ba.min_y, bb.min_y);
  const double max_x = std::min(ba.max_x, bb.max_x);
  const double max_y = std::min(ba.max_y, bb.max_y);
  if (min_x >= max_x || min_y >= max_y) return 0.0;
  const auto& va = a.vertices();
  const auto& vb = b.vertices();
  return rasterized_area(
      [&](double x, double y) {
        return point_in_ccw_polygon(va, x, y) &&
               point_in_ccw_polygon(vb, x, y);
      },
      min_x, min_y, max_x, max_y, n_side);
}

// ---------------------------------------------------------------------------
// Per-corner ray/plane footprint oracle. Rotations are applied as explicit
// sequential axis rotations of a vector (no composed matrix), mirroring the
// documented convention: roll about the body forward axis first, then pitch,
// then yaw about world z; forward=+x, right=-y, up=+z, pitch -90 is nadir.
struct V3 {
  double x, y, z;
};

inline V3 rotate_about_x(V3 v, double rad) {
  return {v.x, v.y * std::cos(rad) - v.z * std::sin(rad),
          v.y * std::sin(rad) + v.z * std::cos(rad)};
}
inline V3 rotate_about_y(V3 v, double rad) {
  return {v.x * std::cos(rad) + v.z * std::sin(rad), v.y,
          -v.x * std::sin(rad) + v.z * std::cos(rad)};
}
inline V3 rotate_about_z(V3 v, double rad) {
  return {v.x * std::cos(rad) - v.y * std::sin(rad),
          v.x * std::sin(rad) + v.y * std::cos(rad), v.z};
}

// Returns the four ground corner points in image-corner order
// (-1,-1), (+1,-1), (+1,+1), (-1,+1); empty when a ray misses the ground.
inline std::vector<skyloc::GeoPoint> footprint_corners_oracle(
    double cx, double cy, double alt, double roll_deg, double pitch_deg,
    double yaw_deg, double hfov_deg, double vfov_deg) {
  const double d2r = 3.14159265358979323846 / 180.0;
  const double th = std::tan(hfov_deg * d2r / 2.0);
  const double tv = std::tan(vfov_deg * d2r / 2.0);
  const double signs[4][2] = {{-1, -1}, {+1, -1}, {+1, +1}, {-1, +1}};
  std::vector<skyloc::GeoPoint> out;
  for (const auto& s : signs) {
    V3 d{1.0, -s[0] * th, s[1] * tv};
    d = rotate_about_x(d, roll_deg * d2r);
    d = rotate_about_y(d, -pitch_deg * d2r);
    d = rotate_about_z(d, yaw_deg * d2r);
    if (d.z >= 0.0) return {};
    const double t = alt / -d.z;
    out.push_back({cx + t * d.x, cy + t * d.y});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exhaustive tile scan: every tile at every requested level, no bounding-box
// pruning. Overlap test is rasterization-free but independent of the library
// enumeration path (uses the same polygon intersection primitive on purpose:
// what is being verified is the candidate enumeration).
inline std::vector<skyloc::TileId> tiles_overlapping_bruteforce(
    const skyloc::TilePyramid& pyr, const skyloc::ConvexPolygon& region,
    int level_lo, int level_hi) {
  std::vector<skyloc::TileId> out;
  for (int level = level_lo; level <= level_hi; ++level) {
    const std::int64_t n = skyloc::tiles_per_side(level);
    for (std::int64_t y = 0; y < n; ++y) {
      for (std::int64_t x = 0; x < n; ++x) {
        const skyloc::TileId t{level, x, y};
        if (pyr.keep && !pyr.keep->count(t)) continue;
        const auto overlap =
            skyloc::convex_intersection(region, skyloc::tile_bounds(pyr, t));
        if (overlap && skyloc::polygon_area(*overlap) > skyloc::kAreaEps)
          out.push_back(t);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Central finite differences for a scalar function of a flat parameter
// vector.
inline Eigen::VectorXd finite_difference_gradient(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double step = 1e-4) {
  Eigen::VectorXd grad(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + step;
    const double hi = f(probe);
    probe(i) = x(i) - step;
    const double lo = f(probe);
    probe(i) = x(i);
    grad(i) = (hi - lo) / (2.0 * step);
  }
  return grad;
}

inline double relative_gradient_error(const Eigen::VectorXd& analytic,
                                      const Eigen::VectorXd& numeric) {
  const double denom =
      std::max({analytic.norm(), numeric.norm(), 1e-12});
  return (analytic - numeric).norm() / denom;
}

}  // namespace oracles
