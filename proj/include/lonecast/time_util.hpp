#pragma once

#include <cstdint>
#include <string>

namespace lonecast {

constexpr int64_t kSecondsPerDay = 86400;

// All timestamps are UTC epoch seconds. Calendar days are computed in a
// single study-wide timezone expressed as a fixed offset from UTC, so
// daily aggregation is deterministic regardless of where the pipeline runs.
struct TimePolicy {
    int64_t utc_offset_seconds = 0;
};

inline int64_t floor_div(int64_t a, int64_t b) {
    int64_t q = a / b;
    return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
}

// Day index (days since 1970-01-01 in the study timezone) of a timestamp.
int64_t day_of(double t, const TimePolicy& tz = {});

// Start-of-day timestamp (UTC epoch seconds) for a day index.
inline double day_start(int64_t day, const TimePolicy& tz = {}) {
    return double(day * kSecondsPerDay - tz.utc_offset_seconds);
}

// Seconds into the study-timezone day, in [0, 86400).
inline double seconds_into_day(double t, const TimePolicy& tz = {}) {
    return t - day_start(day_of(t, tz), tz);
}

// Civil-date conversions (proleptic Gregorian), after Howard Hinnant's
// public-domain algorithms.
inline int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = unsigned(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return int64_t(era) * 146097 + int64_t(doe) - 719468;
}

inline void civil_from_days(int64_t z, int& y, unsigned& m, unsigned& d) {
    z += 719468;
    const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = unsigned(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int64_t yr = int64_t(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y = int(yr + (m <= 2));
}

// "YYYY-MM-DD" for a day index.
std::string format_day(int64_t day);

// Parse "YYYY-MM-DD" into a day index. Returns false on malformed input.
bool parse_day(const std::string& s, int64_t& day);

} // namespace lonecast
