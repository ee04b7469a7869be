#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace pms {

/// Calendar month. Ordered; `index()` counts months since year 0.
struct YearMonth
{
  int year = 2000;
  int month = 1; // 1..12

  int index() const { return year * 12 + (month - 1); }
  static YearMonth from_index(int idx) { return {idx / 12, idx % 12 + 1}; }

  YearMonth next() const { return from_index(index() + 1); }
  YearMonth plus(int months) const { return from_index(index() + months); }
  int quarter() const { return (month - 1) / 3 + 1; }

  /// Accepts "YYYY-MM", "YYYY-MM-DD" (day ignored) and "YYYY-Qn" (first month
  /// of the quarter).
  static YearMonth parse(std::string_view text);
  std::string str() const;

  friend auto operator<=>(const YearMonth&, const YearMonth&) = default;
};

} // namespace pms
