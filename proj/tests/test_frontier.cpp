#include <gtest/gtest.h>

#include <random>
#include <set>

#include "oracles.hpp"
#include "vlfm/frontier.hpp"

using namespace vlfm;

namespace {

ObstacleMap blank(int w, int h) {
  GridSpec s;
  s.width = w;
  s.height = h;
  return ObstacleMap(s);
}

void expect_matches_reference(const ObstacleMap& m, int min_length, std::uint64_t seed) {
  const auto got = extract_frontiers(m, min_length);
  const auto want = oracle::brute_frontiers(m, min_length);
  ASSERT_EQ(got.size(), want.size()) << "seed " << seed;
  for (std::size_t i = 0; i < got.size(); ++i) {
    ASSERT_EQ(got[i].cells, want[i].cells) << "seed " << seed << " frontier " << i;
    ASSERT_EQ(got[i].midpoint_cell, want[i].midpoint) << "seed " << seed;
    ASSERT_EQ(got[i].midpoint, grid_to_world(want[i].midpoint, m.spec()));
  }
}

}  // namespace

TEST(Frontier, FullyExploredMapHasNone) {
  ObstacleMap m = blank(12, 9);
  for (auto& v : m.explored.data()) v = 1;
  EXPECT_TRUE(extract_frontiers(m).empty());
}

TEST(Frontier, UnexploredMapHasNone) {
  EXPECT_TRUE(extract_frontiers(blank(12, 9)).empty());
}

TEST(Frontier, FiveByFiveHalfExplored) {
  ObstacleMap m = blank(5, 5);
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 3; ++c) m.explored[{r, c}] = 1;
  }
  const auto fs = extract_frontiers(m);
  ASSERT_EQ(fs.size(), 1u);
  EXPECT_EQ(fs[0].cells.size(), 5u);
  std::set<Cell> cells(fs[0].cells.begin(), fs[0].cells.end());
  for (int r = 0; r < 5; ++r) EXPECT_TRUE(cells.count({r, 2}));
  EXPECT_EQ(fs[0].midpoint_cell, (Cell{2, 2}));
}

TEST(Frontier, ObstaclesAreNeverFrontierCells) {
  ObstacleMap m = blank(5, 5);
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 3; ++c) m.explored[{r, c}] = 1;
    m.obstacle[{r, 2}] = 1;
  }
  EXPECT_TRUE(extract_frontiers(m).empty());
}

TEST(Frontier, ShortChainsAreDropped) {
  ObstacleMap m = blank(6, 6);
  m.explored[{2, 2}] = 1;
  m.explored[{2, 3}] = 1;
  EXPECT_TRUE(extract_frontiers(m, 3).empty());
  EXPECT_EQ(extract_frontiers(m, 2).size(), 1u);
}

TEST(Frontier, MatchesBruteForceOnRandomMaps) {
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    expect_matches_reference(oracle::random_frontier_map(seed), 3, seed);
  }
}

TEST(Frontier, MatchesBruteForceWithOtherMinimumLengths) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    expect_matches_reference(oracle::random_frontier_map(seed + 7000, 12), 1, seed);
    expect_matches_reference(oracle::random_frontier_map(seed + 9000, 12), 5, seed);
  }
}

TEST(Frontier, Invariants) {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const ObstacleMap m = oracle::random_frontier_map(seed + 100000, 24);
    const auto fs = extract_frontiers(m, 1);
    std::set<Cell> seen;
    std::size_t total = 0;
    for (const auto& f : fs) {
      ASSERT_NE(std::find(f.cells.begin(), f.cells.end(), f.midpoint_cell), f.cells.end());
      for (std::size_t i = 0; i + 1 < f.cells.size(); ++i) ASSERT_TRUE(adjacent8(f.cells[i], f.cells[i + 1]));
      for (const Cell& c : f.cells) {
        ASSERT_TRUE(seen.insert(c).second) << "cell shared between frontiers";
        ASSERT_TRUE(is_frontier_cell(m, c));
      }
      total += f.cells.size();
    }
    // With min_length 1 every frontier cell belongs to exactly one chain.
    std::size_t predicate = 0;
    for (int r = 0; r < 24; ++r) {
      for (int c = 0; c < 24; ++c) predicate += is_frontier_cell(m, {r, c});
    }
    ASSERT_EQ(total, predicate);
  }
}

TEST(FrontierTracker, IncrementalUpdatesEqualFullExtraction) {
  std::mt19937_64 rng(42);
  ObstacleMap m = blank(30, 30);
  FrontierTracker tracker(3);
  tracker.rebuild(m);
  std::uniform_int_distribution<int> pick(0, 29);
  for (int round = 0; round < 200; ++round) {
    std::vector<Cell> changed;
    for (int k = 0; k < 6; ++k) {
      const Cell c{pick(rng), pick(rng)};
      if (rng() % 4 == 0) {
        m.obstacle[c] = 1;
      } else {
        m.explored[c] = 1;
      }
      changed.push_back(c);
    }
    tracker.update(m, changed);
    ASSERT_EQ(tracker.frontiers(), extract_frontiers(m, 3)) << "round " << round;
  }
}
