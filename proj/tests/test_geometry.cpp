#include "skyloc/geometry.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "skyloc/rng.hpp"

using namespace skyloc;

namespace {

ConvexPolygon unit_square() {
  return ConvexPolygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
}

// Random convex quadrilateral containing its center: one vertex per
// quadrant with jittered angle and radius, retried until strictly convex.
// Keeping the quads "fat" keeps the rasterization oracle accurate.
ConvexPolygon random_convex_quad(StreamRng& rng, double cx, double cy,
                                 double scale) {
  for (;;) {
    const double base = rng.uniform(0, 2 * kPi);
    std::vector<GeoPoint> pts;
    for (int i = 0; i < 4; ++i) {
      const double a = base + i * kPi / 2.0 + rng.uniform(-0.35, 0.35);
      const double r = rng.uniform(0.5, 1.5) * scale;
      pts.push_back({cx + r * std::cos(a), cy + r * std::sin(a)});
    }
    try {
      ConvexPolygon p(pts);
      if (p.size() == 4) return p;
    } catch (const DegenerateError&) {
    }
  }
}

double fov_for_half_tangent(double t) {
  return 2.0 * std::atan(t) * 180.0 / kPi;
}

}  // namespace

TEST(ConvexPolygon, RejectsDegenerateInput) {
  EXPECT_THROW(ConvexPolygon({{0, 0}, {1, 0}}), DegenerateError);
  EXPECT_THROW(ConvexPolygon({{0, 0}, {1, 0}, {2, 0}}), DegenerateError);
  EXPECT_THROW(ConvexPolygon({{0, 0}, {0, 0}, {1, 0}}), DegenerateError);
  // clockwise
  EXPECT_THROW(ConvexPolygon({{0, 0}, {0, 1}, {1, 1}, {1, 0}}),
               DegenerateError);
  // reflex vertex
  EXPECT_THROW(
      ConvexPolygon({{0, 0}, {2, 0}, {0.1, 0.1}, {0, 2}}), DegenerateError);
}

TEST(ConvexPolygon, DropsCollinearVertices) {
  ConvexPolygon p({{0, 0}, {0.5, 0}, {1, 0}, {1, 1}, {0, 1}});
  EXPECT_EQ(p.size(), 4u);
  EXPECT_NEAR(polygon_area(p), 1.0, 1e-12);
}

TEST(PolygonArea, Fixtures) {
  EXPECT_DOUBLE_EQ(polygon_area(unit_square()), 1.0);
  EXPECT_DOUBLE_EQ(polygon_area(ConvexPolygon({{0, 0}, {2, 0}, {0, 2}})),
                   2.0);
}

TEST(PolygonArea, MatchesRasterizationOracle) {
  StreamRng rng(7);
  for (int i = 0; i < 10; ++i) {
    const auto quad = random_convex_quad(rng, 0, 0, 1.0);
    const double exact = polygon_area(quad);
    const double approx = oracles::rasterized_polygon_area(quad);
    EXPECT_NEAR(approx, exact, 1e-3 * exact) << "quad " << i;
  }
}

TEST(ConvexIntersection, Fixtures) {
  const auto sq = unit_square();
  const auto self = convex_intersection(sq, sq);
  ASSERT_TRUE(self.has_value());
  EXPECT_NEAR(polygon_area(*self), 1.0, 1e-12);

  const ConvexPolygon shifted({{0.5, 0}, {1.5, 0}, {1.5, 1}, {0.5, 1}});
  const auto half = convex_intersection(sq, shifted);
  ASSERT_TRUE(half.has_value());
  EXPECT_NEAR(polygon_area(*half), 0.5, 1e-12);

  const ConvexPolygon far({{5, 5}, {6, 5}, {6, 6}, {5, 6}});
  EXPECT_FALSE(convex_intersection(sq, far).has_value());
}

TEST(ConvexIntersection, AreaBoundedByInputs) {
  StreamRng rng(11);
  for (int i = 0; i < 50; ++i) {
    const auto a = random_convex_quad(rng, 0, 0, 1.0);
    const auto b = random_convex_quad(rng, rng.uniform(-0.5, 0.5),
                                      rng.uniform(-0.5, 0.5), 1.0);
    const auto inter = convex_intersection(a, b);
    if (!inter) continue;
    const double ai = polygon_area(*inter);
    EXPECT_LE(ai, std::min(polygon_area(a), polygon_area(b)) + 1e-9);
  }
}

TEST(Iou, Fixtures) {
  const auto sq = unit_square();
  EXPECT_NEAR(iou(sq, sq), 1.0, 1e-12);

  const ConvexPolygon far({{5, 5}, {6, 5}, {6, 6}, {5, 6}});
  EXPECT_DOUBLE_EQ(iou(sq, far), 0.0);

  const ConvexPolygon shifted({{0.5, 0}, {1.5, 0}, {1.5, 1}, {0.5, 1}});
  EXPECT_NEAR(iou(sq, shifted), 1.0 / 3.0, 1e-12);
}

TEST(Iou, SymmetricAndBounded) {
  StreamRng rng(23);
  for (int i = 0; i < 100; ++i) {
    const auto a = random_convex_quad(rng, 0, 0, 1.0);
    const auto b = random_convex_quad(rng, rng.uniform(-1, 1),
                                      rng.uniform(-1, 1), 1.0);
    const double ab = iou(a, b);
    const double ba = iou(b, a);
    EXPECT_NEAR(ab, ba, 1e-12);
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
  }
}

TEST(ProjectFootprint, NadirSquare) {
  // tan(hfov/2) = 0.5 so the nadir footprint at 100 m is a centered
  // 100 m x 100 m square.
  const double fov = fov_for_half_tangent(0.5);
  const CameraPose pose{{0, 0}, 100.0, 0.0, -90.0, 0.0};
  const auto quad = project_footprint(pose, {fov, fov});

  double min_x = 1e18, max_x = -1e18, min_y = 1e18, max_y = -1e18;
  for (const auto& v : quad.vertices()) {
    min_x = std::min(min_x, v.x_east);
    max_x = std::max(max_x, v.x_east);
    min_y = std::min(min_y, v.y_north);
    max_y = std::max(max_y, v.y_north);
  }
  EXPECT_NEAR(min_x, -50.0, 1e-9);
  EXPECT_NEAR(max_x, 50.0, 1e-9);
  EXPECT_NEAR(min_y, -50.0, 1e-9);
  EXPECT_NEAR(max_y, 50.0, 1e-9);
  EXPECT_NEAR(polygon_area(quad.polygon()), 100.0 * 100.0, 1e-6);
}

TEST(ProjectFootprint, YawRotatesCenteredSquareOntoItself) {
  const double fov = fov_for_half_tangent(0.5);
  const CameraPose base{{0, 0}, 100.0, 0.0, -90.0, 0.0};
  const CameraPose yawed{{0, 0}, 100.0, 0.0, -90.0, 90.0};
  const auto a = project_footprint(base, {fov, fov});
  const auto b = project_footprint(yawed, {fov, fov});

  // Same vertex set, possibly in a different cyclic order.
  for (const auto& v : b.vertices()) {
    bool found = false;
    for (const auto& u : a.vertices())
      found = found || distance(u, v) < 1e-9;
    EXPECT_TRUE(found) << "vertex (" << v.x_east << ", " << v.y_north << ")";
  }
}

TEST(ProjectFootprint, TiltedPoseMatchesRayPlaneOracle) {
  const double fov = fov_for_half_tangent(0.5);
  const CameraPose pose{{0, 0}, 100.0, 0.0, -80.0, 0.0};
  const auto quad = project_footprint(pose, {fov, fov});

  const auto expected = oracles::footprint_corners_oracle(
      0, 0, 100.0, 0.0, -80.0, 0.0, fov, fov);
  ASSERT_EQ(expected.size(), 4u);
  for (const auto& e : expected) {
    bool found = false;
    for (const auto& v : quad.vertices()) found = found || distance(e, v) < 1e-6;
    EXPECT_TRUE(found) << "corner (" << e.x_east << ", " << e.y_north << ")";
  }

  // Trapezoid: the far edge (larger x, camera tilted toward +x) is longer
  // than the near edge.
  double far_len = 0.0, near_len = 0.0;
  const auto& v = quad.vertices();
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& a = v[i];
    const auto& b = v[(i + 1) % 4];
    if (std::abs(a.x_east - b.x_east) < 1e-6) {
      const double len = std::abs(a.y_north - b.y_north);
      if (a.x_east > 0) far_len = len; else near_len = len;
    }
  }
  EXPECT_GT(far_len, 0.0);
  EXPECT_GT(near_len, 0.0);
  EXPECT_GT(far_len, near_len);
}

TEST(ProjectFootprint, RandomPosesMatchOracle) {
  StreamRng rng(101);
  const double fov = fov_for_half_tangent(0.5);
  for (int i = 0; i < 200; ++i) {
    const CameraPose pose{{rng.uniform(-500, 500), rng.uniform(-500, 500)},
                          rng.uniform(80, 650),
                          rng.uniform(-10, 10),
                          rng.uniform(-100, -80),
                          rng.uniform(-180, 180)};
    const auto quad = project_footprint(pose, {fov, fov});
    const auto expected = oracles::footprint_corners_oracle(
        pose.ground_point.x_east, pose.ground_point.y_north, pose.altitude,
        pose.roll_deg, pose.pitch_deg, pose.yaw_deg, fov, fov);
    ASSERT_EQ(expected.size(), 4u);
    for (const auto& e : expected) {
      bool found = false;
      for (const auto& v : quad.vertices())
        found = found || distance(e, v) < 1e-6;
      EXPECT_TRUE(found);
    }
  }
}

TEST(ProjectFootprint, NadirRectangleSideLengths) {
  const double hfov = fov_for_half_tangent(0.4);
  const double vfov = fov_for_half_tangent(0.7);
  const double alt = 137.0;
  const CameraPose pose{{12.0, -9.0}, alt, 0.0, -90.0, 0.0};
  const auto quad = project_footprint(pose, {hfov, vfov});

  const double want_w = 2.0 * alt * 0.4;
  const double want_h = 2.0 * alt * 0.7;
  std::vector<double> lens;
  const auto& v = quad.vertices();
  for (std::size_t i = 0; i < 4; ++i)
    lens.push_back(distance(v[i], v[(i + 1) % 4]));
  std::sort(lens.begin(), lens.end());
  EXPECT_NEAR(lens[0], want_w, 1e-9 * want_w);
  EXPECT_NEAR(lens[1], want_w, 1e-9 * want_w);
  EXPECT_NEAR(lens[2], want_h, 1e-9 * want_h);
  EXPECT_NEAR(lens[3], want_h, 1e-9 * want_h);
}

TEST(ProjectFootprint, TranslationMovesVerticesExactly) {
  StreamRng rng(3);
  const double fov = fov_for_half_tangent(0.5);
  for (int i = 0; i < 50; ++i) {
    CameraPose pose{{rng.uniform(-100, 100), rng.uniform(-100, 100)},
                    rng.uniform(80, 650),
                    rng.uniform(-10, 10),
                    rng.uniform(-100, -80),
                    rng.uniform(-180, 180)};
    const double dx = rng.uniform(-1000, 1000);
    const double dy = rng.uniform(-1000, 1000);
    const auto base = project_footprint(pose, {fov, fov});
    CameraPose moved = pose;
    moved.ground_point = pose.ground_point + GeoPoint{dx, dy};
    const auto shifted = project_footprint(moved, {fov, fov});
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_NEAR(shifted.vertices()[k].x_east,
                  base.vertices()[k].x_east + dx, 1e-9);
      EXPECT_NEAR(shifted.vertices()[k].y_north,
                  base.vertices()[k].y_north + dy, 1e-9);
    }
  }
}

TEST(ProjectFootprint, Errors) {
  const double fov = fov_for_half_tangent(0.5);
  EXPECT_THROW(
      project_footprint({{0, 0}, 0.0, 0, -90, 0}, {fov, fov}),
      DegenerateError);
  EXPECT_THROW(
      project_footprint({{0, 0}, -5.0, 0, -90, 0}, {fov, fov}),
      DegenerateError);
  // level flight: rays at/above the horizon
  EXPECT_THROW(project_footprint({{0, 0}, 100.0, 0, 0, 0}, {fov, fov}),
               HorizonError);
  EXPECT_THROW(project_footprint({{0, 0}, 100.0, 0, 45, 0}, {fov, fov}),
               HorizonError);
  EXPECT_THROW(project_footprint({{0, 0}, 100.0, 0, -90, 0}, {0.0, 50.0}),
               DomainError);
}

TEST(AngleNormalization, WrapsIntoRange) {
  EXPECT_DOUBLE_EQ(normalize_angle_deg(190.0), -170.0);
  EXPECT_DOUBLE_EQ(normalize_angle_deg(-190.0), 170.0);
  EXPECT_DOUBLE_EQ(normalize_angle_deg(360.0), 0.0);
  EXPECT_DOUBLE_EQ(normalize_angle_deg(-180.0), -180.0);
  const CameraPose p = normalized({{0, 0}, 10, 370.0, -450.0, 720.0});
  EXPECT_DOUBLE_EQ(p.roll_deg, 10.0);
  EXPECT_DOUBLE_EQ(p.pitch_deg, -90.0);
  EXPECT_DOUBLE_EQ(p.yaw_deg, 0.0);
}

TEST(Iou, IntersectionMatchesRasterizationOracle) {
  StreamRng rng(41);
  for (int i = 0; i < 10; ++i) {
    const auto a = random_convex_quad(rng, 0, 0, 1.0);
    const auto b = random_convex_quad(rng, rng.uniform(-0.3, 0.3),
                                      rng.uniform(-0.3, 0.3), 1.0);
    const auto inter = convex_intersection(a, b);
    ASSERT_TRUE(inter.has_value());
    const double exact = polygon_area(*inter);
    const double approx = oracles::rasterized_intersection_area(a, b);
    EXPECT_NEAR(approx, exact, 1e-3 * exact) << "pair " << i;
  }
}
