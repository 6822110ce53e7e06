#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "skyloc/errors.hpp"

namespace skyloc {

inline constexpr double kPi = 3.14159265358979323846;

// Tolerances shared by the polygon code. Distances are meters, areas m^2.
inline constexpr double kVertexTol = 1e-9;   // duplicate / collinear vertices
inline constexpr double kAreaEps = 1e-12;    // area treated as zero
inline constexpr double kRayZEps = 1e-12;    // vertical ray component cutoff

struct GeoPoint {
  double x_east = 0.0;
  double y_north = 0.0;
};

inline GeoPoint operator+(GeoPoint a, GeoPoint b) {
  return {a.x_east + b.x_east, a.y_north + b.y_north};
}
inline GeoPoint operator-(GeoPoint a, GeoPoint b) {
  return {a.x_east - b.x_east, a.y_north - b.y_north};
}

inline double cross(GeoPoint a, GeoPoint b) {
  return a.x_east * b.y_north - a.y_north * b.x_east;
}

inline double distance(GeoPoint a, GeoPoint b) {
  return std::hypot(a.x_east - b.x_east, a.y_north - b.y_north);
}

/// Wraps an angle in degrees into [-180, 180]. Values already in range pass
/// through unchanged (bit-exact).
inline double normalize_angle_deg(double deg) {
  if (deg >= -180.0 && deg <= 180.0) return deg;
  double a = std::fmod(deg + 180.0, 360.0);
  if (a < 0.0) a += 360.0;
  return a - 180.0;
}

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }

struct CameraPose {
  GeoPoint ground_point;    // point on the ground plane below the camera
  double altitude = 0.0;    // meters above the ground plane, > 0
  double roll_deg = 0.0;    // about the optical axis
  double pitch_deg = 0.0;   // -90 points straight down
  double yaw_deg = 0.0;     // heading; 0 faces +x_east, positive toward north
};

/// Returns the pose with all attitude angles wrapped into [-180, 180].
inline CameraPose normalized(CameraPose pose) {
  pose.roll_deg = normalize_angle_deg(pose.roll_deg);
  pose.pitch_deg = normalize_angle_deg(pose.pitch_deg);
  pose.yaw_deg = normalize_angle_deg(pose.yaw_deg);
  return pose;
}

struct CameraIntrinsics {
  double hfov_deg = 0.0;
  double vfov_deg = 0.0;
};

inline void validate(const CameraIntrinsics& intr) {
  if (!(intr.hfov_deg > 0.0 && intr.hfov_deg < 180.0) ||
      !(intr.vfov_deg > 0.0 && intr.vfov_deg < 180.0)) {
    throw DomainError("field of view must lie in (0, 180) degrees");
  }
}

namespace detail {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

struct Mat3 {
  // row-major
  std::array<double, 9> m{};

  Vec3 operator*(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }
  Mat3 operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += m[i * 3 + k] * o.m[k * 3 + j];
        r.m[i * 3 + j] = s;
      }
    return r;
  }
};

inline Mat3 rot_x(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  return {{1, 0, 0, 0, c, -s, 0, s, c}};
}
inline Mat3 rot_y(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  return {{c, 0, s, 0, 1, 0, -s, 0, c}};
}
inline Mat3 rot_z(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  return {{c, -s, 0, s, c, 0, 0, 0, 1}};
}

// Camera attitude: yaw about world +z, then pitch, then roll, composed so
// that each later rotation acts in the already-rotated (body) frame. The
// camera optical axis at zero angles is +x; pitch -90 points straight down
// for any yaw.
inline Mat3 attitude_matrix(const CameraPose& pose) {
  return rot_z(deg_to_rad(pose.yaw_deg)) *
         rot_y(deg_to_rad(-pose.pitch_deg)) *
         rot_x(deg_to_rad(pose.roll_deg));
}

// Removes consecutive duplicates and collinear-within-tolerance vertices.
// Returns nullopt when fewer than 3 vertices survive; throws DegenerateError
// when a genuinely reflex corner remains (input not convex CCW).
inline std::optional<std::vector<GeoPoint>> sanitize_convex_ccw(
    std::vector<GeoPoint> pts) {
  auto drop_duplicates = [](std::vector<GeoPoint>& v) {
    std::vector<GeoPoint> out;
    out.reserve(v.size());
    for (const auto& p : v) {
      if (out.empty() || distance(out.back(), p) > kVertexTol)
        out.push_back(p);
    }
    while (out.size() > 1 && distance(out.front(), out.back()) <= kVertexTol)
      out.pop_back();
    v = std::move(out);
  };

  drop_duplicates(pts);
  bool changed = true;
  while (changed && pts.size() >= 3) {
    changed = false;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const GeoPoint& prev = pts[(i + pts.size() - 1) % pts.size()];
      const GeoPoint& cur = pts[i];
      const GeoPoint& next = pts[(i + 1) % pts.size()];
      const double chord = distance(prev, next);
      const double c = cross(cur - prev, next - cur);
      // signed perpendicular deviation of `cur` from the chord
      const double dev = chord > 0.0 ? c / chord : 0.0;
      if (dev < -kVertexTol) {
        throw DegenerateError(
            "polygon vertices are not convex in counter-clockwise order");
      }
      if (std::abs(dev) <= kVertexTol) {
        pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
    }
  }
  if (pts.size() < 3) return std::nullopt;
  return pts;
}

inline double shoelace_area(const std::vector<GeoPoint>& pts) {
  double twice = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const GeoPoint& a = pts[i];
    const GeoPoint& b = pts[(i + 1) % pts.size()];
    twice += a.x_east * b.y_north - b.x_east * a.y_north;
  }
  return 0.5 * twice;
}

}  // namespace detail

// Strictly convex polygon, vertices counter-clockwise. Construction
// validates; duplicate and collinear-within-tolerance vertices are dropped.
class ConvexPolygon {
 public:
  explicit ConvexPolygon(std::vector<GeoPoint> vertices) {
    for (const auto& p : vertices) {
      if (!std::isfinite(p.x_east) || !std::isfinite(p.y_north))
        throw DegenerateError("polygon vertex is not finite");
    }
    if (vertices.size() < 3)
      throw DegenerateError("polygon needs at least 3 vertices");
    auto cleaned = detail::sanitize_convex_ccw(std::move(vertices));
    if (!cleaned)
      throw DegenerateError("polygon degenerates to fewer than 3 vertices");
    vertices_ = std::move(*cleaned);
  }

  const std::vector<GeoPoint>& vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }

 private:
  std::vector<GeoPoint> vertices_;
};

/// Shoelace area in square meters, positive for valid polygons.
inline double polygon_area(const ConvexPolygon& p) {
  return detail::shoelace_area(p.vertices());
}

/// True when the point lies inside or on the boundary.
inline bool contains(const ConvexPolygon& poly, GeoPoint p) {
  const auto& v = poly.vertices();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const GeoPoint& a = v[i];
    const GeoPoint& b = v[(i + 1) % v.size()];
    if (cross(b - a, p - a) < -kVertexTol * std::max(1.0, distance(a, b)))
      return false;
  }
  return true;
}

struct Aabb {
  double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;
};

inline Aabb bounding_box(const ConvexPolygon& p) {
  Aabb box{p.vertices()[0].x_east, p.vertices()[0].y_north,
           p.vertices()[0].x_east, p.vertices()[0].y_north};
  for (const auto& v : p.vertices()) {
    box.min_x = std::min(box.min_x, v.x_east);
    box.min_y = std::min(box.min_y, v.y_north);
    box.max_x = std::max(box.max_x, v.x_east);
    box.max_y = std::max(box.max_y, v.y_north);
  }
  return box;
}

/// Exact intersection of two convex polygons by clipping `a` against each
/// half-plane of `b`. Empty (no overlap with positive area) is a value.
inline std::optional<ConvexPolygon> convex_intersection(
    const ConvexPolygon& a, const ConvexPolygon& b) {
  std::vector<GeoPoint> out = a.vertices();
  const auto& clip = b.vertices();
  for (std::size_t e = 0; e < clip.size() && !out.empty(); ++e) {
    const GeoPoint ca = clip[e];
    const GeoPoint cb = clip[(e + 1) % clip.size()];
    const GeoPoint dir = cb - ca;
    std::vector<GeoPoint> in;
    in.swap(out);
    for (std::size_t i = 0; i < in.size(); ++i) {
      const GeoPoint cur = in[i];
      const GeoPoint nxt = in[(i + 1) % in.size()];
      const double dc = cross(dir, cur - ca);
      const double dn = cross(dir, nxt - ca);
      if (dc >= 0.0) out.push_back(cur);
      if ((dc > 0.0 && dn < 0.0) || (dc < 0.0 && dn > 0.0)) {
        const double t = dc / (dc - dn);
        out.push_back({cur.x_east + t * (nxt.x_east - cur.x_east),
                       cur.y_north + t * (nxt.y_north - cur.y_north)});
      }
    }
  }
  if (out.size() < 3) return std::nullopt;
  if (std::abs(detail::shoelace_area(out)) < kAreaEps) return std::nullopt;
  auto cleaned = detail::sanitize_convex_ccw(std::move(out));
  if (!cleaned) return std::nullopt;
  return ConvexPolygon(std::move(*cleaned));
}

/// Intersection area over union area, clamped into [0, 1].
inline double iou(const ConvexPolygon& a, const ConvexPolygon& b) {
  const double area_a = polygon_area(a);
  const double area_b = polygon_area(b);
  double inter = 0.0;
  if (auto overlap = convex_intersection(a, b)) {
    inter = polygon_area(*overlap);
  }
  const double uni = area_a + area_b - inter;
  if (uni < kAreaEps) {
    throw DegenerateError("iou union area below 1e-12 m^2");
  }
  return std::clamp(inter / uni, 0.0, 1.0);
}

// Convex quadrilateral footprint, counter-clockwise, positive area.
class FootprintQuad {
 public:
  explicit FootprintQuad(std::vector<GeoPoint> corners)
      : polygon_(std::move(corners)) {
    if (polygon_.size() != 4)
      throw DegenerateError("footprint must have exactly 4 vertices");
    if (polygon_area(polygon_) <= 0.0)
      throw DegenerateError("footprint area must be positive");
  }

  const ConvexPolygon& polygon() const { return polygon_; }
  const std::vector<GeoPoint>& vertices() const {
    return polygon_.vertices();
  }

 private:
  ConvexPolygon polygon_;
};

/// Intersects the four corner view-rays with the ground plane. Throws
/// HorizonError when any corner ray is horizontal or upward and
/// DegenerateError when altitude <= 0.
inline FootprintQuad project_footprint(const CameraPose& pose_in,
                                       const CameraIntrinsics& intr) {
  validate(intr);
  const CameraPose pose = normalized(pose_in);
  if (!(pose.altitude > 0.0) || !std::isfinite(pose.altitude))
    throw DegenerateError("altitude must be positive");

  const detail::Mat3 rot = detail::attitude_matrix(pose);
  const double th = std::tan(deg_to_rad(intr.hfov_deg) / 2.0);
  const double tv = std::tan(deg_to_rad(intr.vfov_deg) / 2.0);

  // Image corners in cyclic order; camera frame is forward=+x,
  // right=-y, up=+z.
  constexpr std::array<std::array<double, 2>, 4> kCorners{
      {{-1.0, -1.0}, {+1.0, -1.0}, {+1.0, +1.0}, {-1.0, +1.0}}};

  std::vector<GeoPoint> ground;
  ground.reserve(4);
  for (const auto& [sh, sv] : kCorners) {
    const detail::Vec3 dir_cam{1.0, -sh * th, sv * tv};
    const detail::Vec3 dir = rot * dir_cam;
    if (dir.z >= -kRayZEps) {
      throw HorizonError(
          "corner view-ray does not point below the horizon; footprint "
          "unbounded");
    }
    const double t = pose.altitude / -dir.z;
    // Offsets are computed pose-relative so that moving the ground point
    // translates the footprint without re-deriving the geometry.
    ground.push_back(pose.ground_point + GeoPoint{t * dir.x, t * dir.y});
  }
  if (detail::shoelace_area(ground) < 0.0)
    std::reverse(ground.begin(), ground.end());
  return FootprintQuad(std::move(ground));
}

}  // namespace skyloc
