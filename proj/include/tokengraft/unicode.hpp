#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace tokengraft::unicode {

struct DecodedCodepoint {
  char32_t value;
  std::size_t length;  // bytes consumed, >= 1
  bool valid;
};

// Decodes one scalar starting at `pos`. Invalid sequences consume exactly one
// byte and report valid=false with value U+FFFD.
DecodedCodepoint next_codepoint(std::string_view text, std::size_t pos);

void append_utf8(std::string& out, char32_t cp);
std::string to_utf8(char32_t cp);

bool is_valid_utf8(std::string_view text);

// Unicode White_Space property.
bool is_whitespace(char32_t cp);

std::size_t codepoint_count(std::string_view text);

// Byte offsets of each scalar start, plus text.size() as a final sentinel.
std::vector<std::size_t> codepoint_offsets(std::string_view text);

}  // namespace tokengraft::unicode
