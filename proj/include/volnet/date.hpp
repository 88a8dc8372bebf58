#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace volnet {

using Date = std::chrono::year_month_day;

/// Parses a strict ISO-8601 calendar date (YYYY-MM-DD).
std::optional<Date> parse_date(std::string_view text);

/// Like parse_date but throws ValidationError naming the offending text.
Date parse_date_or_throw(std::string_view text);

std::string format_date(const Date& date);

}  // namespace volnet
