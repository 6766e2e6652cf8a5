#include "prepmark/timeutil.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>

#include <fmt/format.h>

#include "prepmark/error.hpp"

namespace prepmark {

std::string format_timestamp(Timestamp t) {
  const std::time_t tt = static_cast<std::time_t>(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}Z", tm.tm_year + 1900, tm.tm_mon + 1,
                     tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
}

Timestamp parse_timestamp(std::string_view text) {
  const std::string s(text);
  std::tm tm{};
  int consumed = 0;
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  auto fail = [&]() -> Timestamp {
    throw Error(errc::kInvalidArgument, "invalid timestamp '" + s + "', expected YYYY-MM-DDTHH:MM:SSZ");
  };
  if (std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &y, &mo, &d, &h, &mi, &sec, &consumed) == 6) {
    const std::string_view rest = text.substr(static_cast<std::size_t>(consumed));
    if (rest != "Z" && rest != "+00:00") return fail();
  } else if (std::sscanf(s.c_str(), "%4d-%2d-%2d%n", &y, &mo, &d, &consumed) == 3 &&
             static_cast<std::size_t>(consumed) == s.size()) {
  } else {
    return fail();
  }
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || sec > 60 || h < 0 || mi < 0 ||
      sec < 0) {
    return fail();
  }
  tm.tm_year = y - 1900;
  tm.tm_mon = mo - 1;
  tm.tm_mday = d;
  tm.tm_hour = h;
  tm.tm_min = mi;
  tm.tm_sec = sec;
  const Timestamp t = timegm(&tm);
  if (format_timestamp(t).substr(0, 10) != s.substr(0, 10)) return fail();  // e.g. Feb 30
  return t;
}

Timestamp now_utc() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace prepmark
