#pragma once

#include <optional>
#include <string>
#include <vector>

namespace pcast::csv {

/// Splits one CSV record into fields, honoring double-quoted fields with ""
/// escapes. The record must not contain an embedded newline.
std::vector<std::string> split_record(const std::string& line);

/// Quotes a field when it contains a comma, quote, or newline.
std::string escape(const std::string& field);

std::string join_record(const std::vector<std::string>& fields);

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);

/// Parses a whole field as a double; nullopt when any part fails to parse.
std::optional<double> parse_double(const std::string& field);

/// Parses a whole field as an integer.
std::optional<long long> parse_int(const std::string& field);

}  // namespace pcast::csv
