#include "squatscan/punycode.hpp"

#include <limits>

#include "squatscan/util.hpp"

namespace squatscan::punycode {
namespace {

constexpr std::uint32_t kBase = 36;
constexpr std::uint32_t kTmin = 1;
constexpr std::uint32_t kTmax = 26;
constexpr std::uint32_t kSkew = 38;
constexpr std::uint32_t kDamp = 700;
constexpr std::uint32_t kInitialBias = 72;
constexpr std::uint32_t kInitialN = 128;

char encode_digit(std::uint32_t d) {
  return d < 26 ? static_cast<char>('a' + d) : static_cast<char>('0' + d - 26);
}

std::uint32_t decode_digit(char c, std::size_t pos) {
  if (c >= 'a' && c <= 'z') return static_cast<std::uint32_t>(c - 'a');
  if (c >= 'A' && c <= 'Z') return static_cast<std::uint32_t>(c - 'A');
  if (c >= '0' && c <= '9') return static_cast<std::uint32_t>(c - '0' + 26);
  throw ParseError("invalid punycode digit", pos);
}

std::uint32_t adapt(std::uint32_t delta, std::uint32_t numpoints, bool firsttime) {
  delta = firsttime ? delta / kDamp : delta / 2;
  delta += delta / numpoints;
  std::uint32_t k = 0;
  while (delta > ((kBase - kTmin) * kTmax) / 2) {
    delta /= kBase - kTmin;
    k += kBase;
  }
  return k + (((kBase - kTmin + 1) * delta) / (delta + kSkew));
}

}  // namespace

std::vector<char32_t> utf8_decode(std::string_view s) {
  std::vector<char32_t> out;
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    std::size_t extra;
    char32_t cp;
    if (c < 0x80) {
      extra = 0;
      cp = c;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      throw ParseError("invalid utf-8 byte", i);
    }
    if (extra > 0 && i + extra >= s.size()) {
      throw ParseError("truncated utf-8 sequence", i);
    }
    for (std::size_t k = 1; k <= extra; ++k) {
      unsigned char cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) throw ParseError("invalid utf-8 continuation", i + k);
      cp = (cp << 6) | (cc & 0x3F);
    }
    // reject overlong encodings and surrogates
    if ((extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) || (extra == 3 && cp < 0x10000) ||
        (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF) {
      throw ParseError("invalid utf-8 code point", i);
    }
    out.push_back(cp);
    i += extra + 1;
  }
  return out;
}

std::string utf8_encode(const std::vector<char32_t>& cps) {
  std::string out;
  for (char32_t cp : cps) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

std::string encode(const std::vector<char32_t>& input) {
  std::string out;
  for (char32_t cp : input) {
    if (cp < 0x80) out.push_back(static_cast<char>(cp));
  }
  std::uint32_t b = static_cast<std::uint32_t>(out.size());
  std::uint32_t h = b;
  if (b > 0) out.push_back('-');

  std::uint32_t n = kInitialN;
  std::uint32_t delta = 0;
  std::uint32_t bias = kInitialBias;
  const std::uint32_t total = static_cast<std::uint32_t>(input.size());

  while (h < total) {
    std::uint32_t m = std::numeric_limits<std::uint32_t>::max();
    for (char32_t cp : input) {
      if (cp >= n && cp < m) m = static_cast<std::uint32_t>(cp);
    }
    if (m - n > (std::numeric_limits<std::uint32_t>::max() - delta) / (h + 1)) {
      throw ParseError("punycode overflow");
    }
    delta += (m - n) * (h + 1);
    n = m;
    for (char32_t cp : input) {
      if (cp < n && ++delta == 0) throw ParseError("punycode overflow");
      if (cp == n) {
        std::uint32_t q = delta;
        for (std::uint32_t k = kBase;; k += kBase) {
          std::uint32_t t = k <= bias ? kTmin : (k >= bias + kTmax ? kTmax : k - bias);
          if (q < t) break;
          out.push_back(encode_digit(t + (q - t) % (kBase - t)));
          q = (q - t) / (kBase - t);
        }
        out.push_back(encode_digit(q));
        bias = adapt(delta, h + 1, h == b);
        delta = 0;
        ++h;
      }
    }
    ++delta;
    ++n;
  }
  return out;
}

std::vector<char32_t> decode(std::string_view input) {
  std::vector<char32_t> out;
  std::size_t basic_end = input.rfind('-');
  std::size_t pos = 0;
  if (basic_end != std::string_view::npos) {
    for (std::size_t i = 0; i < basic_end; ++i) {
      unsigned char c = static_cast<unsigned char>(input[i]);
      if (c >= 0x80) throw ParseError("non-ascii in punycode basic part", i);
      out.push_back(c);
    }
    pos = basic_end + 1;
  }

  std::uint32_t n = kInitialN;
  std::uint32_t i = 0;
  std::uint32_t bias = kInitialBias;

  while (pos < input.size()) {
    std::uint32_t oldi = i;
    std::uint32_t w = 1;
    for (std::uint32_t k = kBase;; k += kBase) {
      if (pos >= input.size()) throw ParseError("truncated punycode", pos);
      std::uint32_t digit = decode_digit(input[pos], pos);
      ++pos;
      if (digit > (std::numeric_limits<std::uint32_t>::max() - i) / w) {
        throw ParseError("punycode overflow", pos);
      }
      i += digit * w;
      std::uint32_t t = k <= bias ? kTmin : (k >= bias + kTmax ? kTmax : k - bias);
      if (digit < t) break;
      if (w > std::numeric_limits<std::uint32_t>::max() / (kBase - t)) {
        throw ParseError("punycode overflow", pos);
      }
      w *= kBase - t;
    }
    std::uint32_t len = static_cast<std::uint32_t>(out.size()) + 1;
    bias = adapt(i - oldi, len, oldi == 0);
    n += i / len;
    i %= len;
    if (n > 0x10FFFF || (n >= 0xD800 && n <= 0xDFFF)) throw ParseError("punycode code point out of range", pos);
    out.insert(out.begin() + i, static_cast<char32_t>(n));
    ++i;
  }
  return out;
}

}  // namespace squatscan::punycode
