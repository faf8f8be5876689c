#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "stormrain/error.hpp"

namespace stormrain {

// Instants are UTC seconds since the Unix epoch. All record timestamps are
// ISO-8601 UTC with seconds precision ("2004-08-05T11:24:00Z"; the trailing
// 'Z' and a space instead of 'T' are both accepted).
using Instant = std::int64_t;

namespace detail {

// Days since 1970-01-01 for a proleptic Gregorian date (Howard Hinnant's
// days_from_civil).
inline std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y = static_cast<int>(yy + (m <= 2));
}

}  // namespace detail

inline Instant make_instant(int y, unsigned mo, unsigned d, unsigned h = 0,
                            unsigned mi = 0, unsigned s = 0) {
  return detail::days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + s;
}

inline Instant parse_instant(std::string_view text) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char sep = 0;
  int consumed = 0;
  std::string buf(text);
  const int n = std::sscanf(buf.c_str(), "%d-%d-%d%c%d:%d:%d%n", &y, &mo, &d,
                            &sep, &h, &mi, &s, &consumed);
  static constexpr int kDays[12] = {31, 28, 31, 30, 31, 30,
                                    31, 31, 30, 31, 30, 31};
  const bool leap = mo == 2 && (y % 4 == 0 && (y % 100 != 0 || y % 400 == 0));
  if (n < 7 || (sep != 'T' && sep != ' ') || mo < 1 || mo > 12 || d < 1 ||
      d > kDays[mo > 0 && mo < 13 ? mo - 1 : 0] + (leap ? 1 : 0) || h < 0 ||
      h > 23 || mi < 0 || mi > 59 || s < 0 || s > 60) {
    throw DataError("invalid timestamp: '" + buf + "'");
  }
  const std::string tail = buf.substr(static_cast<std::size_t>(consumed));
  if (!tail.empty() && tail != "Z") {
    throw DataError("invalid timestamp suffix: '" + buf + "'");
  }
  return make_instant(y, static_cast<unsigned>(mo), static_cast<unsigned>(d),
                      static_cast<unsigned>(h), static_cast<unsigned>(mi),
                      static_cast<unsigned>(s));
}

inline std::string format_instant(Instant t) {
  std::int64_t days = t / 86400;
  std::int64_t sec = t % 86400;
  if (sec < 0) {
    sec += 86400;
    --days;
  }
  int y;
  unsigned mo, d;
  detail::civil_from_days(days, y, mo, d);
  char out[32];
  std::snprintf(out, sizeof(out), "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", y, mo,
                d, static_cast<long long>(sec / 3600),
                static_cast<long long>((sec / 60) % 60),
                static_cast<long long>(sec % 60));
  return out;
}

// Midnight (00:00 UTC) of the calendar day containing t.
inline Instant day_start(Instant t) {
  Instant d = t / 86400;
  if (t < 0 && t % 86400 != 0) --d;
  return d * 86400;
}

}  // namespace stormrain
