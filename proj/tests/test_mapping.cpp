#include <gtest/gtest.h>

#include <random>
#include <set>

#include "oracles.hpp"
#include "vlfm/mapping.hpp"

using namespace vlfm;

namespace {

constexpr double kPi = std::numbers::pi;

ObstacleMap open_map(int n, double res = 0.1, Point2 origin = {}) {
  GridSpec s;
  s.width = s.height = n;
  s.resolution = res;
  s.origin = origin;
  return ObstacleMap(s);
}

DepthScan uniform_scan(int rays, double range, double hfov = 79.0 * kPi / 180.0) {
  DepthScan s;
  s.values.assign(static_cast<std::size_t>(rays), range);
  s.hfov = hfov;
  return s;
}

}  // namespace

TEST(ScanToPoints, SingleRayAhead) {
  DepthScan s;
  s.values = {1.0};
  const auto pts = scan_to_points(s, Pose2D(0, 0, 0));
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_DOUBLE_EQ(pts[0].x, 1.0);
  EXPECT_DOUBLE_EQ(pts[0].y, 0.0);
}

TEST(ScanToPoints, SingleRayRotated) {
  DepthScan s;
  s.values = {1.0};
  const auto pts = scan_to_points(s, Pose2D(0, 0, kPi / 2));
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_NEAR(pts[0].x, 0.0, 1e-15);
  EXPECT_NEAR(pts[0].y, 1.0, 1e-15);
}

TEST(ScanToPoints, ThreeRaysAcrossNinetyDegrees) {
  const DepthScan s = uniform_scan(3, std::sqrt(2.0), kPi / 2);
  const auto pts = scan_to_points(s, Pose2D(0, 0, 0));
  ASSERT_EQ(pts.size(), 3u);
  // Ray 0 is the rightmost (-45 degrees).
  EXPECT_NEAR(pts[0].x, 1.0, 1e-12);
  EXPECT_NEAR(pts[0].y, -1.0, 1e-12);
  EXPECT_NEAR(pts[1].x, std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(pts[1].y, 0.0, 1e-12);
  EXPECT_NEAR(pts[2].x, 1.0, 1e-12);
  EXPECT_NEAR(pts[2].y, 1.0, 1e-12);
}

TEST(ScanToPoints, NoReturnRaysAreSkipped) {
  DepthScan s = uniform_scan(4, 2.0);
  s.values[1] = kNoReturn;
  EXPECT_EQ(scan_to_points(s, Pose2D()).size(), 3u);
}

TEST(ScanToPoints, HeightBandFiltersShortAndTallReturns) {
  DepthScan s = uniform_scan(5, 2.0);
  s.heights = {0.05, 0.15, 1.0, 1.8, 2.5};
  const auto pts = scan_to_points(s, Pose2D(), HeightBand{0.15, 1.8});
  ASSERT_EQ(pts.size(), 3u);
  const auto all = scan_to_points(uniform_scan(5, 2.0), Pose2D());
  EXPECT_EQ(pts[0], all[1]);
  EXPECT_EQ(pts[1], all[2]);
  EXPECT_EQ(pts[2], all[3]);
}

TEST(UpdateObstacles, EmptyListLeavesMapUnchanged) {
  ObstacleMap m = open_map(10);
  const ObstacleMap before = m;
  EXPECT_TRUE(update_obstacles(m, {}).empty());
  EXPECT_EQ(m, before);
}

TEST(UpdateObstacles, OnePointMarksOneCell) {
  ObstacleMap m = open_map(10);
  const std::vector<Point2> pts{{0.33, 0.51}};
  const auto marked = update_obstacles(m, pts);
  ASSERT_EQ(marked.size(), 1u);
  EXPECT_EQ(marked[0], (Cell{5, 3}));
  EXPECT_EQ(m.obstacle_count(), 1u);
  EXPECT_TRUE(m.is_obstacle({5, 3}));
}

TEST(UpdateObstacles, SamePointTwiceIsIdempotent) {
  ObstacleMap once = open_map(10), twice = open_map(10);
  const std::vector<Point2> p{{0.42, 0.17}};
  update_obstacles(once, p);
  update_obstacles(twice, p);
  EXPECT_TRUE(update_obstacles(twice, p).empty());
  EXPECT_EQ(once, twice);
}

TEST(UpdateObstacles, GrowsForOutsidePointsAndKeepsOldCells) {
  ObstacleMap m = open_map(10);
  update_obstacles(m, std::vector<Point2>{{0.2, 0.2}});
  update_obstacles(m, std::vector<Point2>{{3.0, -2.0}});
  EXPECT_EQ(m.obstacle_count(), 2u);
  EXPECT_TRUE(m.is_obstacle(world_to_grid({0.2, 0.2}, m.spec())));
  EXPECT_TRUE(m.is_obstacle(world_to_grid({3.0, -2.0}, m.spec())));
}

TEST(FovConfidence, ClosedFormValues) {
  const double hfov = 79.0 * kPi / 180.0;
  EXPECT_EQ(fov_confidence(0.0, hfov), 1.0);
  EXPECT_EQ(fov_confidence(hfov / 2, hfov), 0.0);
  EXPECT_EQ(fov_confidence(-hfov / 2, hfov), 0.0);
  EXPECT_EQ(fov_confidence(hfov / 4, hfov), 0.5);
  EXPECT_EQ(fov_confidence(-hfov / 4, hfov), 0.5);
}

TEST(FovConfidence, MatchesSquaredCosine) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uf(0.1, 3.0), ut(-1.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const double hfov = uf(rng), theta = ut(rng) * hfov / 2;
    EXPECT_NEAR(fov_confidence(theta, hfov), oracle::confidence(theta, hfov), 1e-12);
  }
}

TEST(FovMask, AxisCellHasFullConfidence) {
  ObstacleMap m = open_map(41, 0.1, {-2.0, -2.0});
  const FovMask mask = compute_fov_mask(m, Pose2D(0, 0, 0), uniform_scan(64, kNoReturn));
  bool found = false;
  for (const auto& mc : mask.cells) {
    if (mc.cell == world_to_grid({1.0, 0.0}, m.spec())) {
      EXPECT_EQ(mc.confidence, 1.0);
      found = true;
    }
    EXPECT_GE(mc.confidence, 0.0);
    EXPECT_LE(mc.confidence, 1.0);
  }
  EXPECT_TRUE(found);
}

TEST(FovMask, OpenRoomMatchesBruteForceCone) {
  ObstacleMap m = open_map(121, 0.1, {-6.0, -6.0});
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.5, 0.5), h(-kPi, kPi);
  for (int trial = 0; trial < 20; ++trial) {
    const Pose2D pose(u(rng), u(rng), h(rng));
    const DepthScan scan = uniform_scan(64, kNoReturn);
    const FovMask mask = compute_fov_mask(m, pose, scan);
    std::set<Cell> got;
    for (const auto& mc : mask.cells) got.insert(mc.cell);
    for (int r = 0; r < 121; ++r) {
      for (int c = 0; c < 121; ++c) {
        const Point2 q = grid_to_world({r, c}, m.spec());
        const double d = distance(q, pose.position());
        const double th = normalize_angle(std::atan2(q.y - pose.y, q.x - pose.x) - pose.heading());
        const bool clearly_in = d < scan.max_range - 1e-9 && std::abs(th) < scan.hfov / 2 - 1e-9;
        const bool clearly_out = d > scan.max_range + 1e-9 || std::abs(th) > scan.hfov / 2 + 1e-9;
        if (clearly_in) {
          ASSERT_TRUE(got.count({r, c})) << r << "," << c;
        }
        if (clearly_out) {
          ASSERT_FALSE(got.count({r, c})) << r << "," << c;
        }
      }
    }
  }
}

TEST(FovMask, WallBisectingConeHidesEverythingBehindIt) {
  ObstacleMap m = open_map(101, 0.1, {-5.0, -5.0});
  // Wall along x = 2.0 covering the lower half of the cone.
  for (int r = 0; r <= 50; ++r) m.obstacle[{r, 70}] = 1;
  const Pose2D pose(0.0, 0.0, 0.0);
  const FovMask mask = compute_fov_mask(m, pose, uniform_scan(64, kNoReturn));
  int behind_upper = 0;
  for (const auto& mc : mask.cells) {
    const Point2 q = grid_to_world(mc.cell, m.spec());
    EXPECT_FALSE(q.x > 2.05 && q.y < -0.05) << "cell behind the wall is visible";
    behind_upper += q.x > 2.05 && q.y > 0.2;
  }
  EXPECT_GT(behind_upper, 0);  // the open half still sees past x = 2
}

TEST(FovMask, CellsRespectEachRaysRange) {
  ObstacleMap m = open_map(101, 0.1, {-5.0, -5.0});
  DepthScan scan = uniform_scan(32, 1.0);
  const FovMask mask = compute_fov_mask(m, Pose2D(0, 0, 0), scan);
  for (const auto& mc : mask.cells) EXPECT_LE(distance(grid_to_world(mc.cell, m.spec()), {0, 0}), 1.0 + 0.1 + 1e-9);
}

TEST(FovMask, RandomMapsAreSoundAgainstVisibilityOracle) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const ObstacleMap m = oracle::random_occlusion_map(seed);
    std::mt19937_64 rng(seed + 1000);
    std::uniform_real_distribution<double> u(0.5, 5.8), h(-kPi, kPi);
    Pose2D pose;
    do {
      pose = Pose2D(u(rng), u(rng), h(rng));
    } while (m.is_obstacle(m.spec().nearest_cell(pose.position())));
    DepthScan scan = uniform_scan(48, kNoReturn);
    const FovMask mask = compute_fov_mask(m, pose, scan);
    for (const auto& mc : mask.cells) {
      const Point2 q = grid_to_world(mc.cell, m.spec());
      const double th = normalize_angle(std::atan2(q.y - pose.y, q.x - pose.x) - pose.heading());
      ASSERT_TRUE(oracle::visible(m, pose.position(), mc.cell)) << "seed " << seed;
      ASSERT_LE(distance(q, pose.position()), scan.max_range + 1e-9);
      ASSERT_LE(std::abs(th), scan.hfov / 2 + 1e-9);
      ASSERT_NEAR(mc.confidence, oracle::confidence(th, scan.hfov), 1e-9);
    }
  }
}

TEST(UpdateExplored, EmptyMaskChangesNothing) {
  ObstacleMap m = open_map(10);
  const ObstacleMap before = m;
  FovMask mask;
  mask.spec = m.spec();
  EXPECT_TRUE(update_explored(m, mask).empty());
  EXPECT_EQ(m, before);
}

TEST(UpdateExplored, MarksExactlyTheMaskAndIsMonotone) {
  ObstacleMap m = open_map(61, 0.1, {-3.0, -3.0});
  const FovMask a = compute_fov_mask(m, Pose2D(0, 0, 0), uniform_scan(32, 2.0));
  const auto fresh = update_explored(m, a);
  EXPECT_EQ(fresh.size(), a.size());
  EXPECT_EQ(m.explored_count(), a.size());
  const std::size_t after_first = m.explored_count();
  const FovMask b = compute_fov_mask(m, Pose2D(0, 0, 1.0), uniform_scan(32, 2.0));
  update_explored(m, b);
  EXPECT_GE(m.explored_count(), after_first);
  for (const auto& mc : a.cells) EXPECT_TRUE(m.is_explored(mc.cell));
}
