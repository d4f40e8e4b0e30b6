#pragma once

#include <chrono>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace trialmatch {

// Calendar date without time zone. Stored as days since 1970-01-01 so
// comparisons and day arithmetic are trivial.
class Date {
 public:
  constexpr Date() = default;

  static Date from_ymd(int year, unsigned month, unsigned day);
  static Date from_days(std::int64_t days_since_epoch) { return Date(days_since_epoch); }

  // Strict ISO-8601 "YYYY-MM-DD". Throws ParseError on malformed or
  // non-existent dates (2023-02-30).
  static Date parse_iso(std::string_view text);
  static std::optional<Date> try_parse_iso(std::string_view text);

  // "mm/dd/yyyy" as used in free-text clinical histories.
  static std::optional<Date> try_parse_us(std::string_view text);

  std::string iso() const;
  std::int64_t days() const { return days_; }
  int year() const;

  Date plus_days(std::int64_t n) const { return Date(days_ + n); }

  auto operator<=>(const Date&) const = default;

 private:
  constexpr explicit Date(std::int64_t d) : days_(d) {}
  std::int64_t days_ = 0;
};

}  // namespace trialmatch
