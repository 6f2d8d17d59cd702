#pragma once

// UTF-8 helpers. Offsets exposed to the rest of the library are in Unicode
// code points; byte offsets stay inside this module.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace eacl::text {

/// Number of code points in a UTF-8 string. Throws InputError on invalid UTF-8.
std::size_t codepoint_length(std::string_view s);

/// Byte offset of the code point at index `cp`. `cp == length` is allowed.
std::size_t byte_offset(std::string_view s, std::size_t cp);

/// Substring by code point range [begin, end).
std::string substr_cp(std::string_view s, std::size_t begin, std::size_t end);

/// Code point index of a byte offset that falls on a boundary.
std::size_t codepoint_index(std::string_view s, std::size_t byte);

std::vector<std::string> split_whitespace(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Collapse whitespace runs to one space and trim both ends.
std::string collapse_whitespace(std::string_view s);

std::string to_lower_ascii(std::string_view s);
bool iequals_ascii(std::string_view a, std::string_view b);

/// Strip leading/trailing ASCII punctuation from a token.
std::string strip_punct(std::string_view token);

/// Byte position of `needle` in `hay` (case-insensitive ASCII) where the match
/// starts and ends on a word boundary, or npos.
std::size_t find_word(std::string_view hay, std::string_view needle, std::size_t from = 0);

}  // namespace eacl::text
