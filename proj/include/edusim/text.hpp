#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace edusim::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool contains(std::string_view haystack, std::string_view needle);
bool icontains(std::string_view haystack, std::string_view needle);

// Number of UTF-8 code points. Invalid lead bytes count as one character.
std::size_t char_count(std::string_view s);

// Keeps at most max_chars code points; never splits a multi-byte sequence.
std::string truncate_chars(std::string_view s, std::size_t max_chars);

std::vector<std::string> split_whitespace(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);

// Lowercase alphanumeric runs ("x^2+4x" -> {"x", "2", "4x"}).
std::vector<std::string> word_tokens(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Rough token estimate for logging when a backend reports no usage.
inline int estimate_tokens(std::string_view s) { return static_cast<int>((s.size() + 3) / 4); }

}  // namespace edusim::text
