#pragma once

// Calendar dates and UTC timestamps on top of <chrono>.

#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include "maskscope/error.hpp"

namespace maskscope {

using Date = std::chrono::sys_days;
using Timestamp = std::chrono::sys_seconds;

namespace detail {

inline bool parse_digits(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  int v = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    const char c = s[i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  return true;
}

}  // namespace detail

inline std::optional<Date> try_parse_date(std::string_view s) {
  int y = 0, m = 0, d = 0;
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  if (!detail::parse_digits(s, 0, 4, y) || !detail::parse_digits(s, 5, 2, m) ||
      !detail::parse_digits(s, 8, 2, d))
    return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{unsigned(m)},
                                        std::chrono::day{unsigned(d)}};
  if (!ymd.ok()) return std::nullopt;
  return Date{ymd};
}

inline Date parse_date(std::string_view s) {
  if (auto d = try_parse_date(s)) return *d;
  throw Error(Errc::parse, "invalid date '" + std::string(s) + "' (expected YYYY-MM-DD)");
}

inline std::string format_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()),
                unsigned(ymd.day()));
  return buf;
}

/// Accepts `YYYY-MM-DDTHH:MM:SS` with optional fractional seconds and a `Z`
/// or `+HH:MM` / `-HH:MM` suffix. A missing suffix means UTC.
inline std::optional<Timestamp> try_parse_timestamp(std::string_view s) {
  if (s.size() < 19 || (s[10] != 'T' && s[10] != ' ') || s[13] != ':' || s[16] != ':')
    return std::nullopt;
  auto date = try_parse_date(s.substr(0, 10));
  if (!date) return std::nullopt;
  int hh = 0, mm = 0, ss = 0;
  if (!detail::parse_digits(s, 11, 2, hh) || !detail::parse_digits(s, 14, 2, mm) ||
      !detail::parse_digits(s, 17, 2, ss) || hh > 23 || mm > 59 || ss > 60)
    return std::nullopt;
  std::size_t pos = 19;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    const std::size_t start = pos;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
    if (pos == start) return std::nullopt;
  }
  int offset_min = 0;
  if (pos < s.size()) {
    if (s[pos] == 'Z' || s[pos] == 'z') {
      ++pos;
    } else if (s[pos] == '+' || s[pos] == '-') {
      const int sign = s[pos] == '+' ? 1 : -1;
      int oh = 0, om = 0;
      if (pos + 6 != s.size() || s[pos + 3] != ':' || !detail::parse_digits(s, pos + 1, 2, oh) ||
          !detail::parse_digits(s, pos + 4, 2, om))
        return std::nullopt;
      offset_min = sign * (oh * 60 + om);
      pos += 6;
    }
  }
  if (pos != s.size()) return std::nullopt;
  using namespace std::chrono;
  return Timestamp{*date} + hours{hh} + minutes{mm} + seconds{ss} - minutes{offset_min};
}

inline std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  const Date d = floor<days>(t);
  const hh_mm_ss hms{t - d};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02dZ", format_date(d).c_str(),
                int(hms.hours().count()), int(hms.minutes().count()),
                int(hms.seconds().count()));
  return buf;
}

/// Civil date of `t` shifted by a fixed UTC offset.
inline Date local_date(Timestamp t, int utc_offset_minutes = 0) {
  return std::chrono::floor<std::chrono::days>(t + std::chrono::minutes{utc_offset_minutes});
}

inline long days_between(Date from, Date to) { return (to - from).count(); }

/// Inclusive date range.
struct DateRange {
  Date start;
  Date end;

  bool contains(Date d) const { return d >= start && d <= end; }
  long days() const { return days_between(start, end) + 1; }
};

}  // namespace maskscope
