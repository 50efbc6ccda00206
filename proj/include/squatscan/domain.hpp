#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "squatscan/psl.hpp"

namespace squatscan {

// A decomposed domain name. `s` is the subdomain (possibly empty, dots kept),
// `d` the registrable label, `sx` the public suffix, `raw` the normalized
// original. Joining the non-empty parts with dots reconstructs `raw`.
struct Fqdn {
  std::string s;
  std::string d;
  std::string sx;
  std::string raw;

  bool operator==(const Fqdn& other) const { return raw == other.raw; }
};

// Lowercases, strips one trailing dot, and converts internationalized labels
// to their ASCII (punycode) form. Idempotent. Throws ParseError with the
// offending byte position on empty labels or illegal characters.
std::string normalize(std::string_view raw);

// Same treatment for a single label (no dots).
std::string normalize_label(std::string_view label, std::size_t base_pos = 0);

// Splits a normalized name around its longest-match public suffix.
// Throws ParseError when the name is a bare public suffix.
Fqdn parse_fqdn(std::string_view normalized, const SuffixRuleSet& psl);

// LLM-friendly structured record {"s":..., "d":..., "sx":...}; `s` is always
// present, possibly the empty string.
nlohmann::ordered_json to_structured(const Fqdn& fqdn);

std::string registrable(const Fqdn& fqdn);

// Unicode display form with "xn--" labels decoded. Computed on demand; the
// canonical internal form stays ASCII.
std::string display_form(const Fqdn& fqdn);

// Valid generated hostname label: [a-z0-9-], no leading/trailing hyphen,
// length 1..63.
bool is_valid_variant_label(std::string_view label);

enum class Squat { Typo, Homo, Bit, Sound, Tld, Combo, Level, Hybrid };
enum class TypoSubtype { MissingDot, Omission, Permutation, Replacement, Insertion };

struct SquattingType {
  Squat kind;
  std::optional<TypoSubtype> subtype;  // set for Typo verdicts from the generators
  std::vector<Squat> techniques;       // set for Hybrid, always >= 2 entries

  static SquattingType simple(Squat kind) { return {kind, std::nullopt, {}}; }
  static SquattingType typo(TypoSubtype sub) { return {Squat::Typo, sub, {}}; }
  static SquattingType hybrid(std::vector<Squat> techs);
};

std::string_view to_string(Squat kind);
std::string_view to_string(TypoSubtype sub);
std::optional<Squat> squat_from_string(std::string_view s);
std::optional<TypoSubtype> typo_subtype_from_string(std::string_view s);

enum class VerdictSource { Llm, Baseline, Oracle };

// One asserted squatting finding: the input parts, the squatting type, and
// the targeted legitimate registrable domain.
struct Verdict {
  Fqdn fqdn;
  SquattingType type;
  std::string target;
  VerdictSource source = VerdictSource::Baseline;
};

}  // namespace squatscan
