#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace prepmark {

// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_timestamp(Timestamp t);

// Accepts "YYYY-MM-DDTHH:MM:SSZ", "YYYY-MM-DDTHH:MM:SS+00:00" and
// "YYYY-MM-DD" (midnight). Throws InvalidArgument.
Timestamp parse_timestamp(std::string_view text);

Timestamp now_utc();

}  // namespace prepmark
