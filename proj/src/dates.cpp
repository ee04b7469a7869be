#include "pms/dates.hpp"

#include "pms/types.hpp"

#include <charconv>
#include <cstdio>

namespace pms {

namespace {

int parse_int(std::string_view s, std::string_view whole)
{
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw InputError("malformed date '" + std::string(whole) + "'");
  }
  return value;
}

} // namespace

YearMonth YearMonth::parse(std::string_view text)
{
  while (!text.empty() && (text.front() == ' ' || text.front() == '"')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '"' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (text.size() < 7 || text[4] != '-') {
    throw InputError("malformed date '" + std::string(text) + "' (expected YYYY-MM)");
  }
  const int year = parse_int(text.substr(0, 4), text);
  if (text[5] == 'Q' || text[5] == 'q') {
    const int q = parse_int(text.substr(6), text);
    if (q < 1 || q > 4) throw InputError("bad quarter in '" + std::string(text) + "'");
    return {year, 3 * (q - 1) + 1};
  }
  const int month = parse_int(text.substr(5, 2), text);
  if (month < 1 || month > 12) throw InputError("bad month in '" + std::string(text) + "'");
  if (text.size() != 7 && (text.size() != 10 || text[7] != '-')) {
    throw InputError("malformed date '" + std::string(text) + "'");
  }
  return {year, month};
}

std::string YearMonth::str() const
{
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
  return buf;
}

} // namespace pms
