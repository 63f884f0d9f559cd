#pragma once

// UTF-8 helpers shared by the cleaners and the string metrics. Case folding
// is simple (non-locale) folding over ASCII and the Latin-1 supplement.

#include <string>
#include <string_view>
#include <vector>

namespace kgdd::text {

// Invalid bytes decode to U+FFFD, one per byte.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);

char32_t fold_lower(char32_t c);
char32_t fold_upper(char32_t c);

std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);
std::string trim(std::string_view s);
std::string collapse_whitespace(std::string_view s);

// Whitespace-separated tokens; empty tokens are never produced.
std::vector<std::string> tokens(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool is_space(char32_t c);
bool starts_with_digit(std::string_view s);

}  // namespace kgdd::text
