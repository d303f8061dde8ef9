#include "lonecast/time_util.hpp"

#include <cmath>
#include <cstdio>

namespace lonecast {

int64_t day_of(double t, const TimePolicy& tz) {
    return int64_t(std::floor((t + double(tz.utc_offset_seconds)) / double(kSecondsPerDay)));
}

std::string format_day(int64_t day) {
    int y;
    unsigned m, d;
    civil_from_days(day, y, m, d);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", y, m, d);
    return buf;
}

bool parse_day(const std::string& s, int64_t& day) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (s[i] < '0' || s[i] > '9') return false;
    int y = std::stoi(s.substr(0, 4));
    unsigned m = unsigned(std::stoi(s.substr(5, 2)));
    unsigned d = unsigned(std::stoi(s.substr(8, 2)));
    if (m < 1 || m > 12 || d < 1 || d > 31) return false;
    day = days_from_civil(y, m, d);
    // Round-trip check catches impossible dates like Feb 30.
    int y2;
    unsigned m2, d2;
    civil_from_days(day, y2, m2, d2);
    return y2 == y && m2 == m && d2 == d;
}

} // namespace lonecast
