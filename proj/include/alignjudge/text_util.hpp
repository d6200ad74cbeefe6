#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace alignjudge::text {

// UTF-8 helpers. Offsets are byte offsets throughout the library.

bool is_char_boundary(std::string_view s, std::size_t offset);
bool is_valid_utf8(std::string_view s);

// Decodes the code point starting at `pos` and advances `pos` past it.
// Malformed sequences decode to U+FFFD and advance a single byte.
char32_t decode_next(std::string_view s, std::size_t& pos);

// Number of code points in s[0, byte_offset).
std::size_t code_point_index(std::string_view s, std::size_t byte_offset);
std::size_t code_point_count(std::string_view s);

bool is_ascii_space(char c);
bool is_unicode_space(char32_t cp);
bool is_punctuation(char32_t cp);

struct TokenSpan {
  std::size_t begin;
  std::size_t end;
};

// Word runs plus one token per punctuation character; whitespace separates.
// This is the tokenizer behind estimate_tokens and the positional mocks.
std::vector<TokenSpan> lexical_tokens(std::string_view s);

std::string ascii_lower(std::string_view s);
std::string_view trim(std::string_view s);

}  // namespace alignjudge::text
