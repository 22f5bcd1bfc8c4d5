#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace discofeed::text_util {

std::string_view trim(std::string_view s) noexcept;
std::string to_lower(std::string_view s);

// Splits on a single delimiter character; keeps empty fields.
std::vector<std::string> split(std::string_view s, char delim);

// Whitespace-separated decimal floats. Throws Error(parse) on a bad field.
std::vector<double> parse_doubles(std::string_view s);

// Removes trailing sentence/clause punctuation and whitespace.
std::string strip_trailing_punct(std::string_view s);

bool is_space(char c) noexcept;

}  // namespace discofeed::text_util
