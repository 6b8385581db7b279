#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pretrand {

// Decodes UTF-8 bytes to codepoints; malformed sequences yield U+FFFD and
// resume at the next byte. Character-level modeling runs on codepoints so
// multi-byte symbols (emoji and friends) stay single units.
std::vector<std::uint32_t> utf8_decode(const std::string& s);

void utf8_append(std::string& out, std::uint32_t cp);
std::string utf8_encode(const std::vector<std::uint32_t>& cps);

// ASCII-only lowercasing; non-ASCII bytes pass through untouched.
std::string lower_ascii(const std::string& s);

}  // namespace pretrand
