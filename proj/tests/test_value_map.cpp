#include <gtest/gtest.h>

#include <random>
#include <set>

#include "vlfm/mapping.hpp"
#include "vlfm/policy.hpp"
#include "vlfm/value_map.hpp"

using namespace vlfm;

namespace {

GridSpec grid(int n) {
  GridSpec s;
  s.width = s.height = n;
  s.resolution = 0.1;
  return s;
}

FovMask mask_of(const GridSpec& spec, std::vector<MaskCell> cells) {
  FovMask m;
  m.spec = spec;
  m.cells = std::move(cells);
  return m;
}

double rel_err(double got, long double want) {
  const long double diff = std::abs(static_cast<long double>(got) - want);
  return static_cast<double>(want == 0 ? diff : diff / std::abs(want));
}

}  // namespace

TEST(FuseValue, Examples) {
  EXPECT_DOUBLE_EQ(fuse_value(0.6, 0.2, 0.8, 0.2), 0.52);
  EXPECT_DOUBLE_EQ(fuse_value(0.7, 0.1, 0.4, 0.0), 0.7);
  EXPECT_DOUBLE_EQ(fuse_value(0.7, 0.1, 0.3, 0.3), 0.4);
}

TEST(FuseConfidence, Examples) {
  EXPECT_EQ(fuse_confidence(0.5, 0.5), 0.5);
  EXPECT_EQ(fuse_confidence(1.0, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(fuse_confidence(0.8, 0.2), 0.68);
}

TEST(Fusion, BothConfidencesZeroIsAnError) {
  EXPECT_THROW(fuse_value(0.3, 0.4, 0.0, 0.0), FusionError);
  EXPECT_THROW(fuse_confidence(0.0, 0.0), FusionError);
}

TEST(Fusion, MillionRandomInputsMatchDirectEvaluation) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_v = 0.0, worst_c = 0.0;
  for (int i = 0; i < 1000000; ++i) {
    const double vc = u(rng), vp = u(rng), cc = u(rng), cp = u(rng);
    if (cc + cp == 0.0) continue;
    const long double lvc = vc, lvp = vp, lcc = cc, lcp = cp;
    const long double want_v = (lcc * lvc + lcp * lvp) / (lcc + lcp);
    const long double want_c = (lcc * lcc + lcp * lcp) / (lcc + lcp);
    const double v = fuse_value(vc, vp, cc, cp);
    const double c = fuse_confidence(cc, cp);
    worst_v = std::max(worst_v, rel_err(v, want_v));
    worst_c = std::max(worst_c, rel_err(c, want_c));
    // Hull and bias properties.
    ASSERT_GE(v, std::min(vc, vp));
    ASSERT_LE(v, std::max(vc, vp));
    ASSERT_LE(c, std::max(cc, cp));
    ASSERT_GE(c, (cc + cp) / 2 * (1 - 1e-15));
    ASSERT_EQ(fuse_value(vc, vp, cc, cp), fuse_value(vp, vc, cp, cc));
  }
  EXPECT_LE(worst_v, 1e-12);
  EXPECT_LE(worst_c, 1e-12);
}

TEST(Fusion, ConfidenceFixedPointIsExact) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(1e-6, 1.0);
  for (int i = 0; i < 100000; ++i) {
    const double a = u(rng);
    ASSERT_EQ(fuse_confidence(a, a), a);
  }
}

TEST(UpdateMethod, NamesRoundTrip) {
  for (auto m : {UpdateMethod::Replacement, UpdateMethod::UnweightedAverage, UpdateMethod::WeightedAverage}) {
    EXPECT_EQ(parse_update_method(to_string(m)), m);
  }
  EXPECT_THROW(parse_update_method("median"), std::invalid_argument);
}

TEST(ApplyUpdate, FirstObservationWritesScoreEverywhereInMask) {
  ValueMap vm(grid(10));
  const FovMask mask = mask_of(vm.spec(), {{{1, 1}, 1.0}, {{1, 2}, 0.5}, {{4, 4}, 0.25}});
  apply_update(vm, mask, 0.37, UpdateMethod::WeightedAverage);
  for (const auto& mc : mask.cells) {
    EXPECT_EQ(vm.value[mc.cell], 0.37);
    EXPECT_EQ(vm.confidence[mc.cell], mc.confidence);
  }
}

TEST(ApplyUpdate, WeightedTwoObservationsOnAxis) {
  ValueMap vm(grid(10));
  const FovMask mask = mask_of(vm.spec(), {{{3, 3}, 1.0}});
  apply_update(vm, mask, 0.6, UpdateMethod::WeightedAverage);
  apply_update(vm, mask, 0.2, UpdateMethod::WeightedAverage);
  EXPECT_DOUBLE_EQ((vm.value[{3, 3}]), 0.4);
  EXPECT_EQ((vm.confidence[{3, 3}]), 1.0);
}

TEST(ApplyUpdate, ReplacementOverwrites) {
  ValueMap vm(grid(10));
  const FovMask mask = mask_of(vm.spec(), {{{3, 3}, 1.0}});
  apply_update(vm, mask, 0.6, UpdateMethod::Replacement);
  apply_update(vm, mask, 0.2, UpdateMethod::Replacement);
  EXPECT_EQ((vm.value[{3, 3}]), 0.2);
  EXPECT_EQ((vm.confidence[{3, 3}]), 1.0);
}

TEST(ApplyUpdate, UnweightedAveragesValuesAndKeepsMaxConfidence) {
  ValueMap vm(grid(10));
  apply_update(vm, mask_of(vm.spec(), {{{3, 3}, 0.9}}), 0.6, UpdateMethod::UnweightedAverage);
  apply_update(vm, mask_of(vm.spec(), {{{3, 3}, 0.1}}), 0.2, UpdateMethod::UnweightedAverage);
  EXPECT_DOUBLE_EQ((vm.value[{3, 3}]), 0.4);
  EXPECT_EQ((vm.confidence[{3, 3}]), 0.9);
}

TEST(ApplyUpdate, TouchesExactlyTheMaskCells) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto method : {UpdateMethod::Replacement, UpdateMethod::UnweightedAverage, UpdateMethod::WeightedAverage}) {
    ValueMap vm(grid(20));
    for (int round = 0; round < 50; ++round) {
      std::vector<MaskCell> cells;
      std::set<Cell> in_mask;
      for (int r = 0; r < 20; ++r) {
        for (int c = 0; c < 20; ++c) {
          if (u(rng) < 0.2) {
            cells.push_back({{r, c}, 0.05 + 0.95 * u(rng)});
            in_mask.insert({r, c});
          }
        }
      }
      const ValueMap before = vm;
      apply_update(vm, mask_of(vm.spec(), cells), u(rng), method);
      for (int r = 0; r < 20; ++r) {
        for (int c = 0; c < 20; ++c) {
          const bool changed = vm.value[{r, c}] != before.value[{r, c}] || vm.confidence[{r, c}] != before.confidence[{r, c}];
          if (!in_mask.count({r, c})) {
            ASSERT_FALSE(changed);
          }
          ASSERT_GE((vm.value[{r, c}]), 0.0);
          ASSERT_LE((vm.value[{r, c}]), 1.0);
          ASSERT_GE((vm.confidence[{r, c}]), 0.0);
          ASSERT_LE((vm.confidence[{r, c}]), 1.0);
        }
      }
    }
  }
}

TEST(ApplyUpdate, ScoreIsClampedIntoUnitInterval) {
  ValueMap vm(grid(4));
  apply_update(vm, mask_of(vm.spec(), {{{0, 0}, 1.0}}), 1.7, UpdateMethod::WeightedAverage);
  EXPECT_EQ((vm.value[{0, 0}]), 1.0);
}

TEST(FrontierValue, UniformMap) {
  ValueMap vm(grid(10));
  for (auto& v : vm.value.data()) v = 0.7;
  for (auto& c : vm.confidence.data()) c = 1.0;
  Frontier f{{{4, 4}, {4, 5}, {4, 6}}, {4, 5}, {}};
  EXPECT_EQ(frontier_value(vm, f), 0.7);
}

TEST(FrontierValue, SingleHotNeighbour) {
  ValueMap vm(grid(10));
  for (auto& v : vm.value.data()) v = 0.1;
  for (auto& c : vm.confidence.data()) c = 1.0;
  vm.value[{5, 7}] = 0.9;  // diagonal neighbour of (4, 6)
  Frontier f{{{4, 4}, {4, 5}, {4, 6}}, {4, 5}, {}};
  EXPECT_EQ(frontier_value(vm, f), 0.9);
}

TEST(FrontierValue, NeverSeenIsZero) {
  ValueMap vm(grid(10));
  for (auto& v : vm.value.data()) v = 0.8;  // values without confidence do not count
  Frontier f{{{4, 4}, {4, 5}, {4, 6}}, {4, 5}, {}};
  EXPECT_EQ(frontier_value(vm, f), 0.0);
}

TEST(FrontierValue, ArgmaxInvariantUnderMonotoneRescaling) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> values(1 + rng() % 8), dists(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      values[i] = std::round(u(rng) * 5) / 5;  // force ties
      dists[i] = std::round(u(rng) * 4);
    }
    std::vector<double> squashed(values.size()), stretched(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      squashed[i] = std::sqrt(values[i]);
      stretched[i] = std::exp(3 * values[i]) - 7;
    }
    const auto base = argmax_with_tiebreak(values, dists);
    ASSERT_EQ(argmax_with_tiebreak(squashed, dists), base);
    ASSERT_EQ(argmax_with_tiebreak(stretched, dists), base);
  }
}
