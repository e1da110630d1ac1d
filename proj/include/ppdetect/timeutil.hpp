#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace ppdetect {

// All timestamps are stored as UTC epoch seconds. Inputs may carry naive
// local times; the caller supplies the zone as a fixed offset east of UTC.

/// Days since 1970-01-01 for a proleptic-Gregorian civil date.
std::int64_t days_from_civil(int year, int month, int day);

/// Inverse of days_from_civil.
void civil_from_days(std::int64_t days, int& year, int& month, int& day);

/// Parses "Z", "+08:00", "-0530" or "+08" into seconds east of UTC.
std::optional<int> parse_utc_offset(std::string_view text);

/// Parses "YYYY-MM-DD[T ]hh:mm:ss" with an optional zone designator, or a
/// bare integer (epoch seconds, always UTC). `default_offset_s` applies to
/// naive timestamps; an explicit designator in the string wins.
std::optional<std::int64_t> parse_timestamp(std::string_view text, int default_offset_s = 0);

/// "YYYY-MM-DDThh:mm:ssZ" in UTC.
std::string format_timestamp(std::int64_t epoch_s);

/// Calendar-day ordinal of an instant in the zone `offset_s` east of UTC.
std::int64_t day_index(std::int64_t epoch_s, int offset_s = 0);

}  // namespace ppdetect
