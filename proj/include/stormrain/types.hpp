#pragma once

#include <string>
#include <vector>

#include "stormrain/time.hpp"

namespace stormrain {

// One cloud-to-ground flash from the lightning network.
struct LightningStrike {
  Instant t = 0;
  double x_m = 0.0;
  double y_m = 0.0;
};

// One rain-gauge accumulation record. The raw network stamps a reading at the
// *end* of its accumulation span: a record stamped t covers (t - dt, t].
struct GaugeReading {
  std::string station_id;
  double x_m = 0.0;
  double y_m = 0.0;
  Instant stamp = 0;
  double accum_mm = 0.0;
  int interval_min = 0;
};

// One satellite cell-hour: rain over [hour_start, hour_start + 1h) for a grid
// cell addressed by (row, col).
struct SatelliteCellHour {
  int row = 0;
  int col = 0;
  Instant hour_start = 0;
  double rain_mm = 0.0;
};

}  // namespace stormrain
