#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace guesswho::csv {

using Row = std::vector<std::string>;

/// Reads one RFC 4180 record (quoted fields may span lines, `""` escapes a
/// quote). Returns false at end of input. `line` is advanced by the number
/// of physical lines consumed.
bool read_row(std::istream& in, Row& row, std::size_t& line);

/// All fields quoted, rows terminated by '\n'.
std::string format_row(const Row& row);

} // namespace guesswho::csv

namespace guesswho::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);

} // namespace guesswho::text
