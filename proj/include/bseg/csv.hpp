#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace bseg {

/// Splits one CSV line. Handles double-quoted fields with "" escapes and
/// commas inside quotes; embedded newlines are not supported.
std::vector<std::string> split_csv_line(std::string_view line);

/// Quotes a field if it contains a comma, quote, or leading/trailing space.
std::string csv_escape(std::string_view field);

/// Round-trippable decimal form of a double (printf %.17g).
std::string format_double(double v);

std::string_view trim(std::string_view s);

/// Full-string double parse; throws DataError naming `what` on failure.
double parse_double(std::string_view s, const std::string& what);

/// Full-string integer parse; throws DataError naming `what` on failure.
long long parse_int(std::string_view s, const std::string& what);

}  // namespace bseg
