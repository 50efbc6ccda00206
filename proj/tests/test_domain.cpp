#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <string>
#include <vector>

#include "squatscan/domain.hpp"
#include "squatscan/punycode.hpp"
#include "squatscan/psl.hpp"
#include "squatscan/util.hpp"

using namespace squatscan;

namespace {

SuffixRuleSet test_psl() {
  return SuffixRuleSet::from_file(std::string(SQUATSCAN_DATA_DIR) + "/public_suffix_snapshot.dat");
}

// Independent longest-suffix scan used to cross-check public_suffix().
std::string brute_force_suffix(std::string_view name, const std::vector<std::string>& rules) {
  auto labels = split(name, '.');
  std::string best = labels.back();
  std::size_t best_labels = 1;
  for (const auto& rule : rules) {
    auto rlabels = split(rule, '.');
    if (rlabels.size() > labels.size()) continue;
    bool match = true;
    for (std::size_t i = 0; i < rlabels.size(); ++i) {
      const std::string& nl = labels[labels.size() - 1 - i];
      const std::string& rl = rlabels[rlabels.size() - 1 - i];
      if (rl != "*" && rl != nl) {
        match = false;
        break;
      }
    }
    if (match && rlabels.size() > best_labels) {
      best_labels = rlabels.size();
      std::vector<std::string> tail(labels.end() - static_cast<long>(rlabels.size()), labels.end());
      best = join(tail, '.');
    }
  }
  return best;
}

}  // namespace

TEST_CASE("normalize lowercases and strips the root dot") {
  CHECK(normalize("WWW.Example.COM.") == "www.example.com");
  CHECK(normalize("example.com") == "example.com");
}

TEST_CASE("normalize is idempotent") {
  std::vector<std::string> samples = {"WWW.Example.COM.", "login.AMAZ0N.com",
                                      "ex\xd0\xb0mple.com", "xn--exmple-4nf.com"};
  for (const auto& s : samples) {
    std::string once = normalize(s);
    CHECK(normalize(once) == once);
  }
}

TEST_CASE("normalize converts internationalized labels to punycode") {
  // Cyrillic U+0430 in place of Latin 'a'; expected form computed with a
  // reference IDNA encoder.
  CHECK(normalize("ex\xd0\xb0mple.com") == "xn--exmple-4nf.com");
  CHECK(normalize_label("\xd0\xb0\xd1\x80\xd1\x80\xd3\x8f\xd0\xb5") == "xn--80ak6aa92e");
}

TEST_CASE("normalize rejects malformed labels with a position") {
  CHECK_THROWS_AS(normalize(""), ParseError);
  CHECK_THROWS_AS(normalize("a..com"), ParseError);
  try {
    normalize("a..com");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.position() == 2);
  }
  try {
    normalize("ab.ex!mple.com");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.position() == 5);
  }
  CHECK_THROWS_AS(normalize(".example.com"), ParseError);
  CHECK_THROWS_AS(normalize(std::string(64, 'a') + ".com"), ParseError);
}

TEST_CASE("punycode round-trips reference labels") {
  auto cps = punycode::utf8_decode("ex\xd0\xb0mple");
  CHECK(punycode::encode(cps) == "exmple-4nf");
  CHECK(punycode::utf8_encode(punycode::decode("exmple-4nf")) == "ex\xd0\xb0mple");
  CHECK(punycode::utf8_encode(punycode::decode("80ak6aa92e")) ==
        "\xd0\xb0\xd1\x80\xd1\x80\xd3\x8f\xd0\xb5");
}

TEST_CASE("parse_fqdn splits around the longest public suffix") {
  auto psl = test_psl();
  Fqdn a = parse_fqdn("www.example.co.jp", psl);
  CHECK(a.s == "www");
  CHECK(a.d == "example");
  CHECK(a.sx == "co.jp");

  Fqdn b = parse_fqdn("amazon.com.example.com", psl);
  CHECK(b.s == "amazon.com");
  CHECK(b.d == "example");
  CHECK(b.sx == "com");

  Fqdn c = parse_fqdn("example.com", psl);
  CHECK(c.s.empty());
  CHECK(c.d == "example");
  CHECK(c.sx == "com");
}

TEST_CASE("parse_fqdn rejects bare public suffixes") {
  auto psl = test_psl();
  CHECK_THROWS_AS(parse_fqdn("com", psl), ParseError);
  CHECK_THROWS_AS(parse_fqdn("co.jp", psl), ParseError);
}

TEST_CASE("wildcard and exception suffix rules") {
  auto psl = test_psl();
  // *.ck makes any second-level label a suffix, except !www.ck.
  Fqdn a = parse_fqdn("shop.thing.ck", psl);
  CHECK(a.d == "shop");
  CHECK(a.sx == "thing.ck");
  Fqdn b = parse_fqdn("www.ck", psl);
  CHECK(b.d == "www");
  CHECK(b.sx == "ck");
  Fqdn c = parse_fqdn("sub.www.ck", psl);
  CHECK(c.s == "sub");
  CHECK(c.d == "www");
  CHECK(c.sx == "ck");
}

TEST_CASE("unknown TLDs fall back to the last label") {
  auto psl = test_psl();
  Fqdn a = parse_fqdn("domain.example", psl);
  CHECK(a.d == "domain");
  CHECK(a.sx == "example");
}

TEST_CASE("to_structured emits s, d, sx with s always present") {
  auto psl = test_psl();
  auto j1 = to_structured(parse_fqdn("www.amazon.com", psl));
  CHECK(j1.dump() == R"({"s":"www","d":"amazon","sx":"com"})");
  auto j2 = to_structured(parse_fqdn("example.com", psl));
  CHECK(j2.dump() == R"({"s":"","d":"example","sx":"com"})");
}

TEST_CASE("registrable joins label and suffix") {
  CHECK(registrable({"www", "example", "co.jp", "www.example.co.jp"}) == "example.co.jp");
  CHECK(registrable({"login", "amaz0n", "com", "login.amaz0n.com"}) == "amaz0n.com");
  CHECK(registrable({"", "example", "com", "example.com"}) == "example.com");
}

TEST_CASE("display form decodes punycoded labels") {
  auto psl = test_psl();
  Fqdn f = parse_fqdn(normalize("ex\xd0\xb0mple.com"), psl);
  CHECK(display_form(f) == "ex\xd0\xb0mple.com");
}

TEST_CASE("parse then reassemble is the identity on generated names") {
  auto psl = test_psl();
  Rng rng(20240601);
  const std::string charset = "abcdefghijklmnopqrstuvwxyz0123456789-";
  std::vector<std::string> suffixes = {"com", "co.jp", "co.uk", "net", "example", "io"};
  for (int iter = 0; iter < 500; ++iter) {
    std::size_t nlabels = 1 + rng.below(3);
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < nlabels; ++i) {
      std::size_t len = 1 + rng.below(12);
      std::string label;
      for (std::size_t k = 0; k < len; ++k) label.push_back(charset[rng.below(charset.size())]);
      if (label.front() == '-') label.front() = 'a';
      if (label.back() == '-') label.back() = 'z';
      labels.push_back(label);
    }
    std::string raw = join(labels, '.') + "." + suffixes[rng.below(suffixes.size())];
    Fqdn f = parse_fqdn(normalize(raw), psl);
    std::string reassembled = f.s.empty() ? f.d + "." + f.sx : f.s + "." + f.d + "." + f.sx;
    CHECK(reassembled == f.raw);
    CHECK(f.raw == normalize(raw));
    CHECK(!f.d.empty());
    CHECK(f.d.find('.') == std::string::npos);
  }
}

TEST_CASE("public_suffix agrees with a brute-force longest-suffix scan") {
  std::vector<std::string> rules = {"com", "co.jp", "jp", "uk", "co.uk", "*.ck", "io"};
  std::string text;
  for (const auto& r : rules) text += r + "\n";
  auto psl = SuffixRuleSet::from_string(text);

  Rng rng(77);
  std::vector<std::string> parts = {"a", "bb", "ccc", "co", "jp", "com", "uk", "ck", "io", "x9"};
  for (int iter = 0; iter < 2000; ++iter) {
    std::size_t n = 1 + rng.below(4);
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < n; ++i) labels.push_back(parts[rng.below(parts.size())]);
    std::string name = join(labels, '.');
    CHECK(psl.public_suffix(name) == brute_force_suffix(name, rules));
  }
}

TEST_CASE("squat type strings round-trip") {
  for (Squat k : {Squat::Typo, Squat::Homo, Squat::Bit, Squat::Sound, Squat::Tld, Squat::Combo,
                  Squat::Level, Squat::Hybrid}) {
    CHECK(squat_from_string(to_string(k)) == k);
  }
  CHECK(!squat_from_string("bogus").has_value());
  CHECK_THROWS(SquattingType::hybrid({Squat::Homo}));
  CHECK(SquattingType::hybrid({Squat::Homo, Squat::Combo}).techniques.size() == 2);
}
