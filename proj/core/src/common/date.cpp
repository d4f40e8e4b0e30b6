#include "trialmatch/common/date.h"

#include <charconv>
#include <cstdio>

#include "trialmatch/common/error.h"

namespace trialmatch {

namespace {

bool parse_uint(std::string_view s, unsigned& out) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::optional<Date> make_checked(unsigned y, unsigned m, unsigned d) {
  std::chrono::year_month_day ymd{std::chrono::year{static_cast<int>(y)}, std::chrono::month{m},
                                  std::chrono::day{d}};
  if (!ymd.ok()) return std::nullopt;
  return Date::from_days(std::chrono::sys_days{ymd}.time_since_epoch().count());
}

}  // namespace

Date Date::from_ymd(int year, unsigned month, unsigned day) {
  std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                  std::chrono::day{day}};
  if (!ymd.ok()) {
    throw InvalidArgument("invalid calendar date " + std::to_string(year) + "-" +
                          std::to_string(month) + "-" + std::to_string(day));
  }
  return Date(std::chrono::sys_days{ymd}.time_since_epoch().count());
}

std::optional<Date> Date::try_parse_iso(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  unsigned y = 0, m = 0, d = 0;
  if (!parse_uint(text.substr(0, 4), y) || !parse_uint(text.substr(5, 2), m) ||
      !parse_uint(text.substr(8, 2), d)) {
    return std::nullopt;
  }
  return make_checked(y, m, d);
}

Date Date::parse_iso(std::string_view text) {
  auto d = try_parse_iso(text);
  if (!d) throw ParseError("invalid ISO date '" + std::string(text) + "'");
  return *d;
}

std::optional<Date> Date::try_parse_us(std::string_view text) {
  if (text.size() != 10 || text[2] != '/' || text[5] != '/') return std::nullopt;
  unsigned y = 0, m = 0, d = 0;
  if (!parse_uint(text.substr(0, 2), m) || !parse_uint(text.substr(3, 2), d) ||
      !parse_uint(text.substr(6, 4), y)) {
    return std::nullopt;
  }
  return make_checked(y, m, d);
}

std::string Date::iso() const {
  std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{days_}}};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

int Date::year() const {
  std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{days_}}};
  return static_cast<int>(ymd.year());
}

}  // namespace trialmatch
