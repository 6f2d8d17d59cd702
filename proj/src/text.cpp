#include "eacl/text.hpp"

#include <cctype>

#include "eacl/error.hpp"

namespace eacl::text {

namespace {

std::size_t sequence_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead & 0xE0) == 0xC0) return 2;
  if ((lead & 0xF0) == 0xE0) return 3;
  if ((lead & 0xF8) == 0xF0) return 4;
  return 0;
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_word_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) != 0 || c == '_' || c == '-' || u >= 0x80;
}

}  // namespace

std::size_t codepoint_length(std::string_view s) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < s.size();) {
    const std::size_t n = sequence_length(static_cast<unsigned char>(s[i]));
    if (n == 0 || i + n > s.size()) throw InputError("invalid UTF-8 sequence");
    for (std::size_t k = 1; k < n; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) throw InputError("invalid UTF-8 sequence");
    }
    i += n;
    ++count;
  }
  return count;
}

std::size_t byte_offset(std::string_view s, std::size_t cp) {
  std::size_t i = 0;
  for (std::size_t seen = 0; seen < cp; ++seen) {
    if (i >= s.size()) throw InputError("code point offset past end of string");
    const std::size_t n = sequence_length(static_cast<unsigned char>(s[i]));
    if (n == 0) throw InputError("invalid UTF-8 sequence");
    i += n;
  }
  if (i > s.size()) throw InputError("code point offset past end of string");
  return i;
}

std::string substr_cp(std::string_view s, std::size_t begin, std::size_t end) {
  const std::size_t b = byte_offset(s, begin);
  const std::size_t e = byte_offset(s, end);
  return std::string(s.substr(b, e - b));
}

std::size_t codepoint_index(std::string_view s, std::size_t byte) {
  return codepoint_length(s.substr(0, byte));
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    const std::size_t start = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > start) out.emplace_back(s.substr(start, i - start));
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string collapse_whitespace(std::string_view s) { return join(split_whitespace(s), " "); }

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool iequals_ascii(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i]))) return false;
  }
  return true;
}

std::string strip_punct(std::string_view token) {
  std::size_t b = 0;
  std::size_t e = token.size();
  while (b < e && std::ispunct(static_cast<unsigned char>(token[b]))) ++b;
  while (e > b && std::ispunct(static_cast<unsigned char>(token[e - 1]))) --e;
  return std::string(token.substr(b, e - b));
}

std::size_t find_word(std::string_view hay, std::string_view needle, std::size_t from) {
  if (needle.empty() || needle.size() > hay.size()) return std::string_view::npos;
  const std::string lh = to_lower_ascii(hay);
  const std::string ln = to_lower_ascii(needle);
  std::size_t pos = lh.find(ln, from);
  while (pos != std::string::npos) {
    const bool left_ok = pos == 0 || !is_word_char(lh[pos - 1]);
    const std::size_t end = pos + ln.size();
    const bool right_ok = end >= lh.size() || !is_word_char(lh[end]);
    if (left_ok && right_ok) return pos;
    pos = lh.find(ln, pos + 1);
  }
  return std::string_view::npos;
}

}  // namespace eacl::text
