#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "stormrain/error.hpp"
#include "stormrain/field.hpp"
#include "stormrain/verify.hpp"

using namespace stormrain;

TEST(Contingency, ThresholdIsInclusive) {
  const auto t = contingency({0.2, 0.19, 0.0, 5.0}, {0.2, 0.2, 0.1, 0.1});
  EXPECT_EQ(t.a, 1);  // 0.2 vs 0.2: both wet
  EXPECT_EQ(t.c, 1);  // 0.19 vs 0.2: miss
  EXPECT_EQ(t.d, 1);
  EXPECT_EQ(t.b, 1);
  EXPECT_EQ(t.n(), 4);
}

TEST(Contingency, DegenerateDirections) {
  const auto all_dry = contingency({0.0, 0.0}, {1.0, 2.0});
  EXPECT_EQ(all_dry.a, 0);
  EXPECT_EQ(all_dry.b, 0);
  EXPECT_EQ(all_dry.c, 2);
  EXPECT_EQ(all_dry.d, 0);
  const auto agree = contingency({1.0, 0.0, 3.0}, {0.7, 0.1, 0.2});
  EXPECT_EQ(agree.b, 0);
  EXPECT_EQ(agree.c, 0);
}

TEST(Contingency, EmptyPairingThrows) {
  EXPECT_THROW(contingency(std::vector<double>{}, {}), DataError);
  EXPECT_THROW(contingency({1.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST(Scores, TableStatisticsMatchHandComputation) {
  const Scores s = scores({40, 10, 10, 40});
  ASSERT_TRUE(s.poht && s.pod && s.pofd && s.hss);
  EXPECT_DOUBLE_EQ(*s.poht, 0.8);
  EXPECT_DOUBLE_EQ(*s.pod, 0.8);
  EXPECT_DOUBLE_EQ(*s.pofd, 0.2);
  EXPECT_DOUBLE_EQ(*s.hss, 0.6);
}

TEST(Scores, PerfectTableScoresOne) {
  const Scores s = scores({7, 0, 0, 13});
  EXPECT_DOUBLE_EQ(*s.poht, 1.0);
  EXPECT_DOUBLE_EQ(*s.pod, 1.0);
  EXPECT_DOUBLE_EQ(*s.pofd, 0.0);
  EXPECT_DOUBLE_EQ(*s.hss, 1.0);
}

TEST(Scores, MarginalIndependenceGivesZeroSkill) {
  // Counts equal to the product of the marginals: no association.
  const Scores s = scores({20, 30, 20, 30});
  ASSERT_TRUE(s.hss);
  EXPECT_DOUBLE_EQ(*s.hss, 0.0);
}

TEST(Scores, ZeroDenominatorsStayUndefined) {
  const Scores s = scores({0, 0, 0, 5});
  EXPECT_TRUE(s.poht);
  EXPECT_DOUBLE_EQ(*s.poht, 1.0);
  EXPECT_FALSE(s.pod);   // no observed rain
  EXPECT_TRUE(s.pofd);
  EXPECT_DOUBLE_EQ(*s.pofd, 0.0);
  EXPECT_FALSE(s.hss);   // single-class table carries no skill information
}

TEST(Scores, RangesAndSwapInvariance) {
  const std::vector<ContingencyTable> tables{
      {3, 1, 4, 1}, {5, 9, 2, 6}, {10, 0, 3, 7}, {1, 1, 1, 1}};
  for (const auto& t : tables) {
    const Scores s = scores(t);
    EXPECT_GE(*s.poht, 0.0);
    EXPECT_LE(*s.poht, 1.0);
    EXPECT_GE(*s.pod, 0.0);
    EXPECT_LE(*s.pod, 1.0);
    EXPECT_GE(*s.pofd, 0.0);
    EXPECT_LE(*s.pofd, 1.0);
    if (s.hss) {
      EXPECT_LE(*s.hss, 1.0);
    }
    const Scores swapped = scores({t.d, t.c, t.b, t.a});
    if (s.hss && swapped.hss) {
      EXPECT_DOUBLE_EQ(*s.hss, *swapped.hss);
    }
  }
}

TEST(Rmse, BasicValues) {
  EXPECT_DOUBLE_EQ(rmse({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}), 0.0);
  EXPECT_DOUBLE_EQ(rmse({2.0, 3.0}, {1.0, 2.0}), 1.0);
  EXPECT_DOUBLE_EQ(rmse({0.0, 2.0}, {1.0, 1.0}), 1.0);
  EXPECT_THROW(rmse(std::vector<double>{}, {}), DataError);
}

TEST(Rmse, SymmetricAndScaleEquivariant) {
  const std::vector<double> x{0.3, 1.7, 2.9, 0.0};
  const std::vector<double> y{1.1, 0.2, 3.3, 0.4};
  EXPECT_DOUBLE_EQ(rmse(x, y), rmse(y, x));
  std::vector<double> cx = x, cy = y;
  for (double& v : cx) v *= 2.5;
  for (double& v : cy) v *= 2.5;
  EXPECT_NEAR(rmse(cx, cy), 2.5 * rmse(x, y), 1e-12);
}

namespace {

Grid small_grid() { return Grid(0, 0, 10000, 2, 2); }

}  // namespace

TEST(HourlyTotals, SumsCompleteHoursOnly) {
  SpaceTimeField f(small_grid(), 3600, 15, 8);
  for (int t = 0; t < 8; ++t) f.at(t, 0) = t + 1;  // 1..8
  f.at(5, 1) = 2.0;  // other sub-intervals of cell 1 stay missing
  const SpaceTimeField h = hourly_totals(f);
  ASSERT_EQ(h.T, 2);
  EXPECT_EQ(h.dt_min, 60);
  EXPECT_EQ(h.t0, 3600);
  EXPECT_DOUBLE_EQ(h.at(0, 0), 1 + 2 + 3 + 4);
  EXPECT_DOUBLE_EQ(h.at(1, 0), 5 + 6 + 7 + 8);
  EXPECT_FALSE(h.has(0, 1));
  EXPECT_FALSE(h.has(1, 1));  // one present sub-interval is not enough
}

TEST(HourlyTotals, TrailingPartialHourDropped) {
  SpaceTimeField f(small_grid(), 0, 30, 5, 1.0);
  const SpaceTimeField h = hourly_totals(f);
  ASSERT_EQ(h.T, 2);
  EXPECT_DOUBLE_EQ(h.at(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(h.at(1, 3), 2.0);
}

TEST(HourlyTotals, HourlyInputPassesThrough) {
  SpaceTimeField f(small_grid(), 0, 60, 3, 0.5);
  const SpaceTimeField h = hourly_totals(f);
  EXPECT_EQ(h.T, 3);
  EXPECT_DOUBLE_EQ(h.at(2, 2), 0.5);
}

TEST(FieldPairing, RequiresSharedLattice) {
  SpaceTimeField a(small_grid(), 0, 15, 4, 1.0);
  SpaceTimeField shifted(small_grid(), 450, 15, 4, 1.0);
  EXPECT_THROW(rmse(a, shifted), std::invalid_argument);
  SpaceTimeField other(Grid(0, 0, 5000, 2, 2), 0, 15, 4, 1.0);
  EXPECT_THROW(rmse(a, other), std::invalid_argument);
  SpaceTimeField ok(small_grid(), 900, 15, 2, 2.0);
  EXPECT_DOUBLE_EQ(rmse(a, ok), 1.0);  // overlap on intervals 1-2 of `a`
}

TEST(BaselineCompare, PerfectModelAndBiasedSatellite) {
  const Grid g = small_grid();
  const int gauged = 1;
  SpaceTimeField gauges(g, 0, 15, 8);
  SpaceTimeField pred(g, 0, 15, 8, 0.3);
  for (int t = 0; t < 8; ++t) gauges.at(t, gauged) = 0.3;
  SpaceTimeField sat(g, 0, 60, 2, 0.0);
  for (int h = 0; h < 2; ++h) {
    for (int p = 0; p < g.size(); ++p) sat.at(h, p) = 1.2 + 0.2;  // gauge hour + 0.2
  }
  const BaselineComparison cmp = baseline_compare(pred, sat, gauges);
  EXPECT_DOUBLE_EQ(cmp.model_median, 0.0);
  EXPECT_DOUBLE_EQ(cmp.model_variance, 0.0);
  EXPECT_EQ(cmp.model_pairs, 2u);
  EXPECT_NEAR(cmp.satellite_median, 0.2, 1e-12);
  EXPECT_NEAR(cmp.satellite_variance, 0.0, 1e-12);
  // Only the gauged cell shows up in the per-cell volumes.
  ASSERT_EQ(cmp.volumes.size(), 1u);
  EXPECT_EQ(cmp.volumes[0].cell, gauged);
  EXPECT_NEAR(cmp.volumes[0].model_minus_gauge_mm, 0.0, 1e-12);
  EXPECT_NEAR(cmp.volumes[0].satellite_minus_gauge_mm, 0.4, 1e-12);
}

TEST(BaselineCompare, NoGaugedOverlapThrows) {
  const Grid g = small_grid();
  SpaceTimeField gauges(g, 0, 15, 8);  // all missing
  SpaceTimeField pred(g, 0, 15, 8, 0.3);
  SpaceTimeField sat(g, 0, 60, 2, 0.1);
  EXPECT_THROW(baseline_compare(pred, sat, gauges), DataError);
}
