#include "weblapse/time.hpp"

#include <cctype>
#include <chrono>
#include <cstdio>

namespace weblapse {

bool is_leap_year(int year) {
    return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

int last_day_of_month(int year, int month) {
    static const int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month < 1 || month > 12) return 0;
    if (month == 2 && is_leap_year(year)) return 29;
    return days[month - 1];
}

bool is_valid_civil_date(int year, int month, int day) {
    if (month < 1 || month > 12) return false;
    if (day < 1 || day > last_day_of_month(year, month)) return false;
    return true;
}

// Howard Hinnant's civil-days algorithms.
std::int64_t days_from_civil(const CivilDate& d) {
    std::int64_t y = d.year;
    unsigned m = static_cast<unsigned>(d.month);
    unsigned dd = static_cast<unsigned>(d.day);
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + dd - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

CivilDate civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return CivilDate{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

UtcSeconds civil_to_epoch(int year, int month, int day, int hour, int minute, int second) {
    return days_from_civil(CivilDate{year, month, day}) * 86400 + hour * 3600 + minute * 60 + second;
}

void epoch_to_civil(UtcSeconds t, int& year, int& month, int& day, int& hour, int& minute, int& second) {
    std::int64_t days = t / 86400;
    std::int64_t rem = t % 86400;
    if (rem < 0) {
        rem += 86400;
        days -= 1;
    }
    CivilDate d = civil_from_days(days);
    year = d.year;
    month = d.month;
    day = d.day;
    hour = static_cast<int>(rem / 3600);
    minute = static_cast<int>((rem % 3600) / 60);
    second = static_cast<int>(rem % 60);
}

CivilDate civil_date_of(UtcSeconds t) {
    int y, m, d, hh, mm, ss;
    epoch_to_civil(t, y, m, d, hh, mm, ss);
    return CivilDate{y, m, d};
}

std::int64_t days_between(const CivilDate& a, const CivilDate& b) {
    return days_from_civil(b) - days_from_civil(a);
}

std::string format_14digit(UtcSeconds t) {
    int y, m, d, hh, mm, ss;
    epoch_to_civil(t, y, m, d, hh, mm, ss);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d%02d%02d%02d%02d%02d", y, m, d, hh, mm, ss);
    return buf;
}

bool looks_like_14digit(std::string_view text) {
    if (text.size() != 14) return false;
    for (char c : text) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

std::string format_civil(const CivilDate& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year, d.month, d.day);
    return buf;
}

std::string format_day8(const CivilDate& d) {
    char buf[12];
    std::snprintf(buf, sizeof buf, "%04d%02d%02d", d.year, d.month, d.day);
    return buf;
}

UtcSeconds now_utc() {
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

} // namespace weblapse
