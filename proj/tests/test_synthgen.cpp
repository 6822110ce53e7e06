#include "skyloc/synthgen.hpp"

#include <cmath>

#include <gtest/gtest.h>

using namespace skyloc;

namespace {

const double kFov = 2.0 * std::atan(0.5) * 180.0 / kPi;

SyntheticWorld small_world(std::uint64_t seed) {
  return generate_world(seed, 1024.0, 1024.0, 64.0, 12, {kFov, kFov});
}

}  // namespace

TEST(GenerateWorld, DeterministicField) {
  const auto a = small_world(42);
  const auto b = small_world(42);
  EXPECT_EQ(a.cell_feature(3, 5), b.cell_feature(3, 5));
  EXPECT_EQ(a.cell_feature(0, 0), b.cell_feature(0, 0));

  const auto c = small_world(43);
  bool differs = false;
  for (int cx = 0; cx < 4 && !differs; ++cx)
    for (int cy = 0; cy < 4 && !differs; ++cy)
      differs = a.cell_feature(cx, cy) != c.cell_feature(cx, cy);
  EXPECT_TRUE(differs);
}

TEST(GenerateWorld, CellGridArithmetic) {
  const auto world =
      generate_world(1, 9016.0, 9016.0, 64.0, 4, {kFov, kFov});
  EXPECT_EQ(world.cells_x(), 141);  // ceil(9016 / 64)
  EXPECT_EQ(world.cells_y(), 141);
  EXPECT_THROW(generate_world(1, 0.0, 10.0, 64.0, 4, {kFov, kFov}),
               DomainError);
  EXPECT_THROW(generate_world(1, 10.0, 10.0, 64.0, 0, {kFov, kFov}),
               DomainError);
}

TEST(ViewFeatures, SingleCellRegionReturnsThatCellNormalized) {
  const auto world = small_world(7);
  const ConvexPolygon cell({{64, 128}, {128, 128}, {128, 192}, {64, 192}});
  const auto f = view_features(world, cell);
  const Eigen::VectorXd expected = world.cell_feature(1, 2).normalized();
  EXPECT_NEAR((f - expected).norm(), 0.0, 1e-9);
  EXPECT_NEAR(f.norm(), 1.0, 1e-12);
}

TEST(ViewFeatures, IdenticalRegionsIdenticalFeatures) {
  const auto world = small_world(7);
  const ConvexPolygon region({{100, 100}, {300, 120}, {280, 350}, {90, 300}});
  EXPECT_EQ(view_features(world, region), view_features(world, region));
}

TEST(ViewFeatures, FieldScalingLeavesOutputUnchanged) {
  auto a = small_world(9);
  auto b = small_world(9);
  b.feature_scale = 3.7;
  const ConvexPolygon region({{50, 50}, {400, 80}, {420, 400}, {60, 380}});
  EXPECT_NEAR((view_features(a, region) - view_features(b, region)).norm(),
              0.0, 1e-12);
}

TEST(ViewFeatures, DisjointRegionsAreUncorrelatedOnAverage) {
  // two far-apart regions over independent cells: cosine similarity has
  // mean approximately 0 across worlds
  double sum = 0.0;
  const ConvexPolygon left({{0, 0}, {192, 0}, {192, 192}, {0, 192}});
  const ConvexPolygon right({{704, 704}, {960, 704}, {960, 960}, {704, 960}});
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto world = small_world(seed);
    sum += view_features(world, left).dot(view_features(world, right));
  }
  EXPECT_LT(std::abs(sum / 100.0), 0.1);
}

TEST(ViewFeatures, OffMapRegionIsDegenerate) {
  const auto world = small_world(3);
  const ConvexPolygon outside(
      {{2000, 2000}, {2100, 2000}, {2100, 2100}, {2000, 2100}});
  EXPECT_THROW(view_features(world, outside), DegenerateError);
}

TEST(GenerateDataset, ForcedNadirProducesAtLeastOnePair) {
  // pitch pinned to -90 and altitude to 100 m: a level-4 tile (64 m) always
  // reaches semi-positive IOU somewhere under the footprint
  auto world = small_world(11);
  world.ranges.altitude_min = world.ranges.altitude_max = 100.0;
  world.ranges.pitch_min = world.ranges.pitch_max = -90.0;
  world.ranges.roll_min = world.ranges.roll_max = 0.0;
  world.ranges.yaw_min = world.ranges.yaw_max = 0.0;

  TilePyramid pyr;
  pyr.origin = {0, 0};
  pyr.map_width = pyr.map_height = 1024.0;
  pyr.max_level = 4;
  PairingConfig cfg;
  cfg.min_level = 3;
  cfg.max_level = 4;

  const auto data = generate_dataset(world, 1, pyr, cfg, 5);
  EXPECT_EQ(data.queries.size(), 1u);
  EXPECT_GE(data.pairs.pairs.size(), 1u);
  EXPECT_TRUE(data.pairs.skipped.empty());
}

TEST(GenerateDataset, DeterministicUnderFixedSeed) {
  const auto world = small_world(13);
  TilePyramid pyr;
  pyr.origin = {0, 0};
  pyr.map_width = pyr.map_height = 1024.0;
  pyr.max_level = 4;
  PairingConfig cfg;
  cfg.min_level = 2;
  cfg.max_level = 4;

  const auto a = generate_dataset(world, 20, pyr, cfg, 99);
  const auto b = generate_dataset(world, 20, pyr, cfg, 99);
  ASSERT_EQ(a.pairs.pairs.size(), b.pairs.pairs.size());
  for (std::size_t i = 0; i < a.pairs.pairs.size(); ++i) {
    EXPECT_EQ(a.pairs.pairs[i].query_id, b.pairs.pairs[i].query_id);
    EXPECT_EQ(a.pairs.pairs[i].tile, b.pairs.pairs[i].tile);
    EXPECT_EQ(a.pairs.pairs[i].iou_value, b.pairs.pairs[i].iou_value);
  }
  for (const auto& [id, f] : a.features.queries)
    EXPECT_EQ(f, b.features.queries.at(id));
}

TEST(GenerateDataset, PosesStayInConfiguredRanges) {
  const auto world = small_world(17);
  TilePyramid pyr;
  pyr.origin = {0, 0};
  pyr.map_width = pyr.map_height = 1024.0;
  pyr.max_level = 4;
  PairingConfig cfg;
  cfg.min_level = 2;
  cfg.max_level = 4;

  const auto data = generate_dataset(world, 200, pyr, cfg, 3);
  ASSERT_EQ(data.queries.size(), 200u);
  for (const auto& q : data.queries) {
    EXPECT_GE(q.pose.altitude, world.ranges.altitude_min);
    EXPECT_LE(q.pose.altitude, world.ranges.altitude_max);
    EXPECT_GE(q.pose.roll_deg, world.ranges.roll_min);
    EXPECT_LE(q.pose.roll_deg, world.ranges.roll_max);
    EXPECT_GE(q.pose.pitch_deg, world.ranges.pitch_min);
    EXPECT_LE(q.pose.pitch_deg, world.ranges.pitch_max);
    EXPECT_GE(q.pose.yaw_deg, world.ranges.yaw_min);
    EXPECT_LE(q.pose.yaw_deg, world.ranges.yaw_max);
    EXPECT_GE(q.pose.ground_point.x_east, 0.0);
    EXPECT_LE(q.pose.ground_point.x_east, 1024.0);
  }
}

TEST(GenerateDataset, EmittedPairsSurviveIndependentRecheck) {
  const auto world = small_world(19);
  TilePyramid pyr;
  pyr.origin = {0, 0};
  pyr.map_width = pyr.map_height = 1024.0;
  pyr.max_level = 4;
  PairingConfig cfg;
  cfg.min_level = 2;
  cfg.max_level = 4;

  const auto data = generate_dataset(world, 100, pyr, cfg, 23);
  std::map<std::string, const QueryRecord*> by_id;
  for (const auto& q : data.queries) by_id[q.query_id] = &q;
  ASSERT_GE(data.pairs.pairs.size(), 50u);
  for (const auto& p : data.pairs.pairs) {
    const QueryRecord* q = by_id.at(p.query_id);
    const auto fp = project_footprint(q->pose, q->intr);
    const double again = iou(fp.polygon(), tile_bounds(pyr, p.tile));
    EXPECT_NEAR(again, p.iou_value, 1e-12);
    EXPECT_EQ(classify_iou(again, cfg), p.label);
    EXPECT_GT(again, cfg.t_semi);
  }
}
