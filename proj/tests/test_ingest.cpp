#include <gtest/gtest.h>

#include <fstream>

#include "stormrain/ingest.hpp"

using namespace stormrain;

namespace {

const Instant kT0 = parse_instant("2004-08-05T00:00:00Z");

Grid small_grid() { return Grid(0.0, 0.0, 10000.0, 3, 4); }

std::string write_file(const std::string& name, const std::string& body) {
  const std::string path = ::testing::TempDir() + name;
  std::ofstream out(path);
  out << body;
  return path;
}

}  // namespace

TEST(LoadLightning, ParsesAndReportsBadLines) {
  const std::string path = write_file(
      "li.csv", "timestamp,x_m,y_m\n2004-08-05T01:00:00Z,1000,2000\n");
  const auto strikes = load_lightning(path);
  ASSERT_EQ(strikes.size(), 1u);
  EXPECT_EQ(strikes[0].t, kT0 + 3600);
  EXPECT_EQ(strikes[0].x_m, 1000.0);

  const std::string bad = write_file(
      "li_bad.csv", "timestamp,x_m,y_m\n2004-08-05T01:00:00Z,1000,2000\nnope,1,2\n");
  try {
    load_lightning(bad);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos);
  }
}

TEST(LoadGauges, ValidatesFields) {
  const std::string path = write_file(
      "ga.csv",
      "station_id,x_m,y_m,timestamp,accum_mm,interval_min\n"
      "s1,5000,5000,2004-08-05T00:15:00Z,0.4,15\n");
  const auto r = load_gauges(path);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].station_id, "s1");
  EXPECT_EQ(r[0].interval_min, 15);

  const std::string neg = write_file(
      "ga_neg.csv",
      "station_id,x_m,y_m,timestamp,accum_mm,interval_min\n"
      "s1,5000,5000,2004-08-05T00:15:00Z,-0.4,15\n");
  EXPECT_THROW(load_gauges(neg), DataError);
}

TEST(BinLightning, LightningConventionAndConservation) {
  const Grid g = small_grid();
  std::vector<LightningStrike> strikes = {
      {kT0, 100.0, 100.0},             // exactly t0 -> interval 0
      {kT0 + 899, 100.0, 100.0},       // still interval 0
      {kT0 + 900, 100.0, 100.0},       // interval 1 boundary
      {kT0 - 1, 100.0, 100.0},         // before window -> dropped
      {kT0 + 4 * 900, 100.0, 100.0},   // past window end -> dropped
      {kT0, -5.0, 100.0},              // off grid -> dropped
  };
  const BinnedLightning b = bin_lightning(strikes, g, kT0, 15, 4);
  EXPECT_EQ(b.counts.at(0, 0), 2.0);
  EXPECT_EQ(b.counts.at(1, 0), 1.0);
  EXPECT_EQ(b.dropped, 3u);
  double total = 0;
  for (const double v : b.counts.values) total += v;
  EXPECT_EQ(static_cast<std::size_t>(total) + b.dropped, strikes.size());
  EXPECT_THROW(bin_lightning(strikes, g, kT0, 15, 0), std::invalid_argument);
}

TEST(AggregateGauges, GaugeStampConventionReindexes) {
  const Grid g = small_grid();
  // A reading stamped t covers (t - dt, t]: the stamp t0+15min is interval 0.
  std::vector<GaugeReading> readings = {
      {"s1", 5000.0, 5000.0, kT0 + 900, 1.2, 15},
      {"s1", 5000.0, 5000.0, kT0, 9.0, 15},  // covers (t0-15, t0] -> outside
  };
  const AggregatedGauges a = aggregate_gauges(readings, g, kT0, 15, 4);
  EXPECT_DOUBLE_EQ(a.rain.at(0, 0), 1.2);
  EXPECT_EQ(a.dropped, 1u);
  EXPECT_FALSE(a.rain.has(1, 0));
  ASSERT_EQ(a.gauged_cells.size(), 1u);
  EXPECT_EQ(a.gauged_cells[0], 0);
}

TEST(AggregateGauges, CoLocatedGaugesMedianEvenCountMeansCentralPair) {
  const Grid g = small_grid();
  std::vector<GaugeReading> readings;
  for (const double v : {1.0, 2.0, 3.0, 10.0}) {
    readings.push_back({"s" + std::to_string(static_cast<int>(v)), 2500.0,
                        2500.0, kT0 + 900, v, 15});
  }
  const AggregatedGauges a = aggregate_gauges(readings, g, kT0, 15, 2);
  EXPECT_DOUBLE_EQ(a.rain.at(0, 0), 2.5);
}

TEST(AggregateGauges, MixedCadenceRejected) {
  const Grid g = small_grid();
  std::vector<GaugeReading> readings = {
      {"a", 2500.0, 2500.0, kT0 + 900, 1.0, 15},
      {"b", 2500.0, 2500.0, kT0 + 1800, 1.0, 30},
  };
  EXPECT_THROW(aggregate_gauges(readings, g, kT0, 15, 4), std::invalid_argument);
}

TEST(AggregateGauges, TimeCodingRoundTrip) {
  // Shifting every gauge stamp by -dt and aggregating under the lightning
  // convention must reproduce the same field.
  const Grid g = small_grid();
  const int T = 6;
  std::vector<GaugeReading> readings;
  unsigned state = 12345;
  auto next = [&state]() {
    state = state * 1664525u + 1013904223u;
    return state;
  };
  for (int k = 0; k < 60; ++k) {
    GaugeReading r;
    r.station_id = "s" + std::to_string(next() % 5);
    r.x_m = static_cast<double>(next() % 40000);
    r.y_m = static_cast<double>(next() % 30000);
    r.stamp = kT0 + static_cast<Instant>(next() % (T + 2)) * 900;
    r.accum_mm = static_cast<double>(next() % 50) / 10.0;
    r.interval_min = 15;
    readings.push_back(r);
  }
  const AggregatedGauges a = aggregate_gauges(readings, g, kT0, 15, T);

  // Reference: shift stamps to interval starts, index with floor((s-t0)/dt).
  SpaceTimeField ref(g, kT0, 15, T);
  std::map<std::pair<int, int>, std::vector<double>> acc;
  std::size_t dropped = 0;
  for (const auto& r : readings) {
    CellIndex c;
    if (!g.locate(r.x_m, r.y_m, c)) {
      ++dropped;
      continue;
    }
    const Instant shifted = r.stamp - 900;
    const std::int64_t off = shifted - kT0;
    if (off < 0 || off % 900 != 0 || off / 900 >= T) {
      ++dropped;
      continue;
    }
    acc[{static_cast<int>(off / 900), g.linear(c)}].push_back(r.accum_mm);
  }
  for (auto& [key, vals] : acc) ref.at(key.first, key.second) = median_of(vals);
  EXPECT_EQ(a.dropped, dropped);
  for (int t = 0; t < T; ++t) {
    for (int cell = 0; cell < g.size(); ++cell) {
      EXPECT_EQ(a.rain.has(t, cell), ref.has(t, cell));
      if (ref.has(t, cell)) {
        EXPECT_DOUBLE_EQ(a.rain.at(t, cell), ref.at(t, cell));
      }
    }
  }
}

TEST(FilterGauges, DropsStationsOverMissingThreshold) {
  // Window of 10 intervals; s1 has 10/10, s2 has 8/10 (20% missing).
  std::vector<GaugeReading> readings;
  for (int i = 0; i < 10; ++i) {
    readings.push_back({"s1", 100.0, 100.0, kT0 + (i + 1) * 900, 0.1, 15});
    if (i < 8) {
      readings.push_back({"s2", 200.0, 200.0, kT0 + (i + 1) * 900, 0.1, 15});
    }
  }
  const auto kept = filter_gauges(readings, 0.10, kT0, 15, 10);
  for (const auto& r : kept) EXPECT_EQ(r.station_id, "s1");
  EXPECT_EQ(kept.size(), 10u);
  // With a permissive threshold both stay.
  EXPECT_EQ(filter_gauges(readings, 0.20, kT0, 15, 10).size(), readings.size());
  EXPECT_THROW(filter_gauges(readings, -0.1, kT0, 15, 10), std::invalid_argument);
  EXPECT_THROW(filter_gauges(readings, 0.1, kT0, 15, 0), std::invalid_argument);
}

TEST(AlignSatellite, MapsHoursAndChecksDuplicates) {
  const Grid g = small_grid();
  std::vector<SatelliteCellHour> recs = {
      {0, 0, kT0, 1.5},
      {2, 3, kT0 + 3600, 0.0},
      {1, 1, kT0 + 7200 + 1800, 2.0},  // off the hourly lattice -> dropped
  };
  const AlignedSatellite a = align_satellite(recs, g, kT0, 3);
  EXPECT_DOUBLE_EQ(a.rain.at(0, 0), 1.5);
  EXPECT_DOUBLE_EQ(a.rain.at(1, g.linear({2, 3})), 0.0);
  EXPECT_EQ(a.dropped, 1u);
  EXPECT_FALSE(a.rain.has(2, 0));  // hour with no record stays missing

  recs.push_back({0, 0, kT0, 9.9});
  EXPECT_THROW(align_satellite(recs, g, kT0, 3), DataError);

  std::vector<SatelliteCellHour> off = {{5, 0, kT0, 1.0}};
  try {
    align_satellite(off, g, kT0, 3);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("(5,0)"), std::string::npos);
  }
}

TEST(Field, MissingNeverConflatedWithZero) {
  const Grid g = small_grid();
  SpaceTimeField f(g, kT0, 15, 2);
  EXPECT_FALSE(f.has(0, 0));
  f.at(0, 0) = 0.0;
  EXPECT_TRUE(f.has(0, 0));
  EXPECT_EQ(f.at(0, 0), 0.0);
  EXPECT_THROW(f.at(2, 0), std::invalid_argument);
}
