#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace irisgate::csv {

/// Splits one CSV line. Double-quoted fields may contain commas and
/// doubled quotes. Returns false on an unterminated quote.
bool split_line(std::string_view line, std::vector<std::string>& fields);

/// Quotes a field only when it contains a comma, quote, or newline.
std::string escape(std::string_view field);

/// Shortest round-trippable decimal for a double.
std::string format_double(double v);

}  // namespace irisgate::csv
