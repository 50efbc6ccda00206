#include "squatscan/domain.hpp"

#include <stdexcept>

#include "squatscan/punycode.hpp"
#include "squatscan/util.hpp"

namespace squatscan {
namespace {

bool is_ascii(std::string_view s) {
  for (unsigned char c : s) {
    if (c >= 0x80) return false;
  }
  return true;
}

// Letters, digits, hyphen; underscore is accepted because pDNS feeds carry
// names like _dmarc.example.com.
bool legal_host_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
}

constexpr std::size_t kMaxLabel = 63;
constexpr std::size_t kMaxName = 253;

}  // namespace

std::string normalize_label(std::string_view label, std::size_t base_pos) {
  if (label.empty()) throw ParseError("empty label", base_pos);
  if (is_ascii(label)) {
    std::string out = to_lower_ascii(label);
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (!legal_host_char(out[i])) {
        throw ParseError("illegal character in label", base_pos + i);
      }
    }
    if (out.size() > kMaxLabel) throw ParseError("label too long", base_pos);
    return out;
  }

  std::vector<char32_t> cps;
  try {
    cps = punycode::utf8_decode(label);
  } catch (const ParseError& e) {
    throw ParseError(e.what(), base_pos + e.position());
  }
  for (auto& cp : cps) {
    if (cp < 0x80) {
      char c = static_cast<char>(cp);
      if (c >= 'A' && c <= 'Z') cp = static_cast<char32_t>(c - 'A' + 'a');
      if (!legal_host_char(static_cast<char>(cp))) {
        throw ParseError("illegal character in label", base_pos);
      }
    }
  }
  std::string out = "xn--" + punycode::encode(cps);
  if (out.size() > kMaxLabel) throw ParseError("label too long", base_pos);
  return out;
}

std::string normalize(std::string_view raw) {
  if (raw.empty()) throw ParseError("empty domain name", 0);
  std::string_view v = raw;
  if (v.back() == '.') v.remove_suffix(1);  // root dot
  if (v.empty()) throw ParseError("empty domain name", 0);

  std::string out;
  std::size_t pos = 0;
  while (true) {
    std::size_t dot = v.find('.', pos);
    std::string_view label = dot == std::string_view::npos ? v.substr(pos) : v.substr(pos, dot - pos);
    out += normalize_label(label, pos);
    if (dot == std::string_view::npos) break;
    out.push_back('.');
    pos = dot + 1;
  }
  if (out.size() > kMaxName) throw ParseError("name too long", 0);
  return out;
}

Fqdn parse_fqdn(std::string_view normalized, const SuffixRuleSet& psl) {
  Fqdn f;
  f.raw = std::string(normalized);
  f.sx = psl.public_suffix(normalized);
  if (f.sx.size() >= normalized.size()) {
    throw ParseError("name is a bare public suffix", 0);
  }
  std::string_view rest = normalized.substr(0, normalized.size() - f.sx.size() - 1);
  std::size_t dot = rest.rfind('.');
  if (dot == std::string_view::npos) {
    f.d = std::string(rest);
  } else {
    f.s = std::string(rest.substr(0, dot));
    f.d = std::string(rest.substr(dot + 1));
  }
  return f;
}

nlohmann::ordered_json to_structured(const Fqdn& fqdn) {
  return nlohmann::ordered_json{{"s", fqdn.s}, {"d", fqdn.d}, {"sx", fqdn.sx}};
}

std::string registrable(const Fqdn& fqdn) { return fqdn.d + "." + fqdn.sx; }

std::string display_form(const Fqdn& fqdn) {
  std::string out;
  for (const auto& label : split(fqdn.raw, '.')) {
    if (!out.empty()) out.push_back('.');
    if (label.starts_with("xn--")) {
      out += punycode::utf8_encode(punycode::decode(label.substr(4)));
    } else {
      out += label;
    }
  }
  return out;
}

bool is_valid_variant_label(std::string_view label) {
  if (label.empty() || label.size() > 63) return false;
  if (label.front() == '-' || label.back() == '-') return false;
  for (char c : label) {
    if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-')) return false;
  }
  return true;
}

SquattingType SquattingType::hybrid(std::vector<Squat> techs) {
  if (techs.size() < 2) throw std::invalid_argument("hybrid type requires at least two techniques");
  return {Squat::Hybrid, std::nullopt, std::move(techs)};
}

std::string_view to_string(Squat kind) {
  switch (kind) {
    case Squat::Typo: return "typo";
    case Squat::Homo: return "homo";
    case Squat::Bit: return "bit";
    case Squat::Sound: return "sound";
    case Squat::Tld: return "tld";
    case Squat::Combo: return "combo";
    case Squat::Level: return "level";
    case Squat::Hybrid: return "hybrid";
  }
  return "unknown";
}

std::string_view to_string(TypoSubtype sub) {
  switch (sub) {
    case TypoSubtype::MissingDot: return "missing_dot";
    case TypoSubtype::Omission: return "omission";
    case TypoSubtype::Permutation: return "permutation";
    case TypoSubtype::Replacement: return "replacement";
    case TypoSubtype::Insertion: return "insertion";
  }
  return "unknown";
}

std::optional<Squat> squat_from_string(std::string_view s) {
  if (s == "typo") return Squat::Typo;
  if (s == "homo") return Squat::Homo;
  if (s == "bit") return Squat::Bit;
  if (s == "sound") return Squat::Sound;
  if (s == "tld") return Squat::Tld;
  if (s == "combo") return Squat::Combo;
  if (s == "level") return Squat::Level;
  if (s == "hybrid") return Squat::Hybrid;
  return std::nullopt;
}

std::optional<TypoSubtype> typo_subtype_from_string(std::string_view s) {
  if (s == "missing_dot") return TypoSubtype::MissingDot;
  if (s == "omission") return TypoSubtype::Omission;
  if (s == "permutation") return TypoSubtype::Permutation;
  if (s == "replacement") return TypoSubtype::Replacement;
  if (s == "insertion") return TypoSubtype::Insertion;
  return std::nullopt;
}

}  // namespace squatscan
