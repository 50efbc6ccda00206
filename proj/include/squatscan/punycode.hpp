#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace squatscan::punycode {

// UTF-8 <-> code point conversion. Decoding throws ParseError with the byte
// offset of the offending sequence.
std::vector<char32_t> utf8_decode(std::string_view s);
std::string utf8_encode(const std::vector<char32_t>& cps);

// RFC 3492 Punycode for a single label, without the "xn--" prefix.
std::string encode(const std::vector<char32_t>& input);
std::vector<char32_t> decode(std::string_view input);

}  // namespace squatscan::punycode
