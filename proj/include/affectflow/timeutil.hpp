#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace affectflow {

/// Floor division toward negative infinity (C++ '/' truncates toward zero).
inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

inline std::int64_t floor_mod(std::int64_t a, std::int64_t b) {
    return a - floor_div(a, b) * b;
}

/// Parse an RFC 3339 timestamp ("2012-03-05T14:23:07Z", numeric offsets and
/// fractional seconds accepted, sub-second part truncated) to UTC epoch
/// seconds. Returns nullopt on malformed or out-of-range input.
std::optional<std::int64_t> parse_rfc3339(const std::string& s);

/// Format UTC epoch seconds as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_rfc3339(std::int64_t epoch_seconds);

/// Weekday of a local timestamp, 0 = Monday ... 6 = Sunday.
inline int weekday_of(std::int64_t local_epoch_seconds) {
    return static_cast<int>(floor_mod(floor_div(local_epoch_seconds, 86400) + 3, 7));
}

/// Hour of day 0..23 of a local timestamp.
inline int hour_of(std::int64_t local_epoch_seconds) {
    return static_cast<int>(floor_mod(local_epoch_seconds, 86400) / 3600);
}

/// Calendar day index (days since 1970-01-01) of a local timestamp.
inline std::int64_t day_of(std::int64_t local_epoch_seconds) {
    return floor_div(local_epoch_seconds, 86400);
}

} // namespace affectflow
