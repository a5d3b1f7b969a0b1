#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace weblapse {

// Seconds since the Unix epoch, always UTC.
using UtcSeconds = std::int64_t;

struct CivilDate {
    int year = 0;
    int month = 1; // 1..12
    int day = 1;   // 1..31

    auto operator<=>(const CivilDate&) const = default;
};

bool is_leap_year(int year);
int last_day_of_month(int year, int month);
bool is_valid_civil_date(int year, int month, int day);

// Days relative to 1970-01-01 (proleptic Gregorian).
std::int64_t days_from_civil(const CivilDate& d);
CivilDate civil_from_days(std::int64_t days);

UtcSeconds civil_to_epoch(int year, int month, int day, int hour = 0, int minute = 0, int second = 0);
void epoch_to_civil(UtcSeconds t, int& year, int& month, int& day, int& hour, int& minute, int& second);

CivilDate civil_date_of(UtcSeconds t);

// Whole calendar days between two dates (b - a), UTC.
std::int64_t days_between(const CivilDate& a, const CivilDate& b);

// 14-digit archival timestamp, YYYYMMDDhhmmss.
std::string format_14digit(UtcSeconds t);
bool looks_like_14digit(std::string_view text);

// "YYYY-MM-DD"
std::string format_civil(const CivilDate& d);

// "YYYYMMDD"
std::string format_day8(const CivilDate& d);

UtcSeconds now_utc();

} // namespace weblapse
