#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace biorhythm {

/// Calendar day, stored as days since 1970-01-01.
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(int days_since_epoch) : days_(days_since_epoch) {}

  /// Parses `YYYY-MM-DD`; throws DomainError on anything else.
  static Date parse(std::string_view iso);
  static Date from_ymd(int year, unsigned month, unsigned day);

  std::string iso() const;
  constexpr int days_since_epoch() const { return days_; }
  /// 0 = Sunday ... 6 = Saturday.
  unsigned weekday() const;
  bool is_weekend() const { return weekday() == 0 || weekday() == 6; }

  constexpr Date operator+(int n) const { return Date(days_ + n); }
  constexpr Date operator-(int n) const { return Date(days_ - n); }
  constexpr int operator-(Date other) const { return days_ - other.days_; }
  constexpr auto operator<=>(const Date&) const = default;

 private:
  int days_ = 0;
};

/// Inclusive range of calendar days.
struct DateInterval {
  Date first;
  Date last;

  int n_days() const { return last - first + 1; }
  bool contains(Date d) const { return first <= d && d <= last; }
  /// Offset of `d` from `first` (may be negative or past the end).
  int index_of(Date d) const { return d - first; }
  bool operator==(const DateInterval&) const = default;
};

}  // namespace biorhythm
