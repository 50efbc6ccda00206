#include "squatscan/squatgen.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "squatscan/punycode.hpp"
#include "squatscan/util.hpp"

namespace squatscan::squatgen {

BrandSet BrandSet::from_entries(const std::vector<std::pair<std::uint32_t, std::string>>& ranked,
                                const SuffixRuleSet& psl) {
  BrandSet bs;
  std::uint32_t last_rank = 0;
  bool first = true;
  for (const auto& [rank, domain] : ranked) {
    if (!first && rank <= last_rank) throw ParseError("brand ranks must be strictly increasing");
    first = false;
    last_rank = rank;
    Fqdn f = parse_fqdn(normalize(domain), psl);
    Brand b{registrable(f), f.d, f.sx, rank};
    if (bs.domains_.count(b.domain)) continue;
    bs.domains_.insert(b.domain);
    bs.brands_.push_back(b);
    bs.label_index_.emplace(b.label, bs.brands_.size() - 1);  // first (best rank) wins
  }
  return bs;
}

BrandSet BrandSet::from_tranco_csv(const std::filesystem::path& path, const SuffixRuleSet& psl) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open brand list: " + path.string());
  std::vector<std::pair<std::uint32_t, std::string>> ranked;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view v = trim(line);
    if (v.empty() || v.front() == '#') continue;
    auto comma = v.find(',');
    if (comma == std::string_view::npos) throw ParseError("expected rank,domain: " + std::string(v));
    std::uint32_t rank = 0;
    for (char c : v.substr(0, comma)) {
      if (c < '0' || c > '9') throw ParseError("bad rank in: " + std::string(v));
      rank = rank * 10 + static_cast<std::uint32_t>(c - '0');
    }
    ranked.emplace_back(rank, std::string(trim(v.substr(comma + 1))));
  }
  return from_entries(ranked, psl);
}

const Brand* BrandSet::by_label(std::string_view label) const {
  auto it = label_index_.find(std::string(label));
  return it == label_index_.end() ? nullptr : &brands_[it->second];
}

std::vector<std::string> BrandSet::suffixes() const {
  std::vector<std::string> out;
  for (const auto& b : brands_) {
    if (std::find(out.begin(), out.end(), b.suffix) == out.end()) out.push_back(b.suffix);
  }
  return out;
}

GeneratorTables GeneratorTables::load(const std::filesystem::path& data_dir) {
  GeneratorTables t{
      KeyboardMap::from_file(data_dir / "qwerty_adjacency.tsv"),
      ConfusableTable::from_file(data_dir / "confusables.tsv"),
      HomophoneTable::from_file(data_dir / "homophones.tsv"),
      load_word_list(data_dir / "combo_words.txt"),
      {}};
  return t;
}

namespace {

void add_if_valid(std::set<std::string>& out, const std::string& variant, const std::string& input) {
  if (variant != input && is_valid_variant_label(variant)) out.insert(variant);
}

}  // namespace

std::set<std::string> gen_typo(const std::string& label, TypoSubtype subtype, const KeyboardMap& kb) {
  std::set<std::string> out;
  const std::size_t n = label.size();
  switch (subtype) {
    case TypoSubtype::MissingDot:
      // applied at FQDN level: www.example.com -> wwwexample.com
      add_if_valid(out, "www" + label, label);
      break;
    case TypoSubtype::Omission:
      for (std::size_t i = 0; i < n; ++i) {
        add_if_valid(out, label.substr(0, i) + label.substr(i + 1), label);
      }
      break;
    case TypoSubtype::Permutation:
      for (std::size_t i = 0; i + 1 < n; ++i) {
        std::string v = label;
        std::swap(v[i], v[i + 1]);
        add_if_valid(out, v, label);
      }
      break;
    case TypoSubtype::Replacement:
      for (std::size_t i = 0; i < n; ++i) {
        for (char c : kb.neighbors(label[i])) {
          std::string v = label;
          v[i] = c;
          add_if_valid(out, v, label);
        }
      }
      break;
    case TypoSubtype::Insertion:
      for (std::size_t i = 0; i <= n; ++i) {
        std::string cands;
        if (i > 0) {
          cands += kb.neighbors(label[i - 1]);
          cands += label[i - 1];
        }
        if (i < n) {
          cands += kb.neighbors(label[i]);
          cands += label[i];
        }
        for (char c : cands) {
          add_if_valid(out, label.substr(0, i) + c + label.substr(i), label);
        }
      }
      break;
  }
  return out;
}

std::set<std::string> gen_bit(const std::string& label) {
  std::set<std::string> out;
  for (std::size_t i = 0; i < label.size(); ++i) {
    for (int bit = 0; bit < 8; ++bit) {
      char c = static_cast<char>(static_cast<unsigned char>(label[i]) ^ (1u << bit));
      bool hostname_char = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
      if (!hostname_char) continue;
      std::string v = label;
      v[i] = c;
      add_if_valid(out, v, label);
    }
  }
  return out;
}

std::set<std::string> gen_homo(const std::string& label, const ConfusableTable& table) {
  std::set<std::string> out;
  for (const auto& p : table.pairs()) {
    std::size_t pos = 0;
    while ((pos = label.find(p.from, pos)) != std::string::npos) {
      std::string v = label.substr(0, pos) + p.to + label.substr(pos + p.from.size());
      try {
        std::string canon = normalize_label(v);
        if (canon != label && (is_valid_variant_label(canon) || canon.starts_with("xn--"))) {
          out.insert(canon);
        }
      } catch (const ParseError&) {
        // substitution produced an unencodable label; skip it
      }
      ++pos;
    }
  }
  return out;
}

std::set<std::string> gen_sound(const std::string& label, const HomophoneTable& homophones) {
  std::set<std::string> out;
  const auto& tokens = homophones.by_token();
  std::size_t i = 0;
  while (i < label.size()) {
    std::size_t match_len = 0;
    const std::vector<std::string>* alts = nullptr;
    std::size_t max_len = std::min(homophones.max_token_length(), label.size() - i);
    for (std::size_t len = max_len; len >= 1; --len) {
      auto it = tokens.find(label.substr(i, len));
      if (it != tokens.end()) {
        match_len = len;
        alts = &it->second;
        break;
      }
    }
    if (alts == nullptr) {
      ++i;
      continue;
    }
    for (const auto& alt : *alts) {
      add_if_valid(out, label.substr(0, i) + alt + label.substr(i + match_len), label);
    }
    i += match_len;
  }
  return out;
}

std::set<std::string> gen_tld(const std::string& registrable_domain, const std::vector<std::string>& tlds,
                              const SuffixRuleSet& psl) {
  std::string suffix = psl.public_suffix(registrable_domain);
  if (suffix.size() >= registrable_domain.size()) {
    throw ParseError("not a registrable domain: " + registrable_domain);
  }
  std::string label = registrable_domain.substr(0, registrable_domain.size() - suffix.size() - 1);
  std::set<std::string> out;
  for (const auto& t : tlds) {
    if (t != suffix) out.insert(label + "." + t);
  }
  return out;
}

std::set<std::string> gen_combo(const std::string& label, const std::vector<std::string>& words) {
  std::set<std::string> out;
  for (const auto& w : words) {
    add_if_valid(out, label + "-" + w, label);
    add_if_valid(out, w + "-" + label, label);
    add_if_valid(out, label + w, label);
    add_if_valid(out, w + label, label);
  }
  return out;
}

std::optional<std::pair<const Brand*, std::string>> detect_combo(const Fqdn& fqdn,
                                                                 const BrandSet& brands) {
  if (brands.by_label(fqdn.d) != nullptr) return std::nullopt;
  const Brand* best = nullptr;
  std::string best_residue;
  for (const auto& b : brands.brands()) {
    if (b.label.size() < 4) continue;
    auto pos = fqdn.d.find(b.label);
    if (pos == std::string::npos) continue;
    std::string residue = fqdn.d.substr(0, pos) + fqdn.d.substr(pos + b.label.size());
    std::erase(residue, '-');
    if (residue.empty()) continue;
    if (best == nullptr || b.label.size() > best->label.size()) {
      best = &b;
      best_residue = residue;
    }
  }
  if (best == nullptr) return std::nullopt;
  return std::make_pair(best, best_residue);
}

namespace {

bool dot_bounded(const std::string& haystack, const std::string& needle) {
  std::size_t pos = 0;
  while ((pos = haystack.find(needle, pos)) != std::string::npos) {
    bool left_ok = pos == 0 || haystack[pos - 1] == '.';
    std::size_t end = pos + needle.size();
    bool right_ok = end == haystack.size() || haystack[end] == '.';
    if (left_ok && right_ok) return true;
    ++pos;
  }
  return false;
}

}  // namespace

const Brand* detect_level(const Fqdn& fqdn, const BrandSet& brands) {
  if (fqdn.s.empty()) return nullptr;
  std::string reg = registrable(fqdn);
  for (const auto& b : brands.brands()) {
    if (reg == b.domain) continue;
    if (dot_bounded(fqdn.s, b.domain)) return &b;
  }
  return nullptr;
}

BaselineDetector::BaselineDetector(const BrandSet& brands, const GeneratorTables& tables,
                                   const SuffixRuleSet& psl)
    : brands_(&brands), tables_(&tables), psl_(&psl) {
  const TypoSubtype subtypes[] = {TypoSubtype::MissingDot, TypoSubtype::Omission,
                                  TypoSubtype::Permutation, TypoSubtype::Replacement,
                                  TypoSubtype::Insertion};
  for (std::size_t bi = 0; bi < brands.brands().size(); ++bi) {
    const Brand& b = brands.brands()[bi];
    for (TypoSubtype sub : subtypes) {
      for (const auto& v : gen_typo(b.label, sub, tables.keyboard)) {
        typo_.emplace(v, VariantHit{static_cast<std::uint32_t>(bi), sub});
      }
    }
    for (const auto& v : gen_bit(b.label)) {
      bit_.emplace(v, VariantHit{static_cast<std::uint32_t>(bi), std::nullopt});
    }
    for (const auto& v : gen_homo(b.label, tables.confusables)) {
      homo_.emplace(v, VariantHit{static_cast<std::uint32_t>(bi), std::nullopt});
    }
    for (const auto& v : gen_sound(b.label, tables.homophones)) {
      sound_.emplace(v, VariantHit{static_cast<std::uint32_t>(bi), std::nullopt});
    }
  }
}

Verdict BaselineDetector::make_verdict(const Fqdn& fqdn, SquattingType type,
                                       const Brand& brand) const {
  return Verdict{fqdn, std::move(type), brand.domain, VerdictSource::Baseline};
}

std::optional<Verdict> BaselineDetector::detect(const Fqdn& fqdn) const {
  if (brands_->contains_domain(registrable(fqdn))) return std::nullopt;

  if (auto it = typo_.find(fqdn.d); it != typo_.end()) {
    return make_verdict(fqdn, SquattingType::typo(*it->second.subtype),
                        brands_->brands()[it->second.brand_idx]);
  }
  if (auto it = bit_.find(fqdn.d); it != bit_.end()) {
    return make_verdict(fqdn, SquattingType::simple(Squat::Bit),
                        brands_->brands()[it->second.brand_idx]);
  }
  if (auto it = homo_.find(fqdn.d); it != homo_.end()) {
    return make_verdict(fqdn, SquattingType::simple(Squat::Homo),
                        brands_->brands()[it->second.brand_idx]);
  }
  if (auto it = sound_.find(fqdn.d); it != sound_.end()) {
    return make_verdict(fqdn, SquattingType::simple(Squat::Sound),
                        brands_->brands()[it->second.brand_idx]);
  }
  if (const Brand* b = brands_->by_label(fqdn.d); b != nullptr && b->suffix != fqdn.sx) {
    return make_verdict(fqdn, SquattingType::simple(Squat::Tld), *b);
  }
  if (const Brand* b = detect_level(fqdn, *brands_)) {
    return make_verdict(fqdn, SquattingType::simple(Squat::Level), *b);
  }
  if (auto combo = detect_combo(fqdn, *brands_)) {
    return make_verdict(fqdn, SquattingType::simple(Squat::Combo), *combo->first);
  }
  return std::nullopt;
}

std::optional<Verdict> BaselineDetector::detect_with_hybrid(const Fqdn& fqdn) const {
  if (auto v = detect(fqdn)) return v;
  if (brands_->contains_domain(registrable(fqdn))) return std::nullopt;
  return hybrid_decompose(fqdn);
}

std::optional<Verdict> BaselineDetector::hybrid_decompose(const Fqdn& fqdn) const {
  // Candidate host labels: the registrable label first, then each subdomain
  // label left to right.
  std::vector<std::pair<std::string, bool>> candidates;
  candidates.emplace_back(fqdn.d, false);
  if (!fqdn.s.empty()) {
    for (const auto& label : split(fqdn.s, '.')) candidates.emplace_back(label, true);
  }

  const ConfusableTable& conf = tables_->confusables;
  for (const auto& [cand_raw, in_subdomain] : candidates) {
    std::string cand = cand_raw;
    if (cand.starts_with("xn--")) {
      try {
        cand = punycode::utf8_encode(punycode::decode(cand.substr(4)));
      } catch (const ParseError&) {
        continue;
      }
    }
    for (const auto& b : brands_->brands()) {
      std::vector<Squat> techs;
      if (auto subs = conf.align(b.label, cand)) {
        if (*subs > 0) techs.push_back(Squat::Homo);
        if (!in_subdomain && fqdn.sx != b.suffix) techs.push_back(Squat::Tld);
        if (in_subdomain) techs.push_back(Squat::Level);
      } else if (b.label.size() >= 4) {
        auto m = conf.contains(b.label, cand);
        if (!m) continue;
        if (m->substitutions > 0) techs.push_back(Squat::Homo);
        if (!in_subdomain && fqdn.sx != b.suffix) techs.push_back(Squat::Tld);
        techs.push_back(Squat::Combo);
        if (in_subdomain) techs.push_back(Squat::Level);
      }
      if (techs.size() >= 2) {
        return make_verdict(fqdn, SquattingType::hybrid(std::move(techs)), b);
      }
    }
  }
  return std::nullopt;
}

namespace {

struct PoolEntry {
  std::string fqdn;
  std::string subtype;
  std::string target;
};

std::vector<DatasetEntry> sample_pool(std::vector<PoolEntry> pool, std::size_t quota,
                                      const std::string& type, Rng& rng,
                                      std::unordered_set<std::string>& used) {
  rng.shuffle(pool);
  std::vector<DatasetEntry> out;
  for (const auto& e : pool) {
    if (out.size() == quota) break;
    if (!used.insert(e.fqdn).second) continue;
    out.push_back({e.fqdn, type, e.subtype, e.target});
  }
  if (out.size() < quota) {
    throw std::runtime_error("type '" + type + "' quota " + std::to_string(quota) +
                             " exceeds generator capacity " + std::to_string(out.size()));
  }
  return out;
}

std::string techniques_string(const SquattingType& t) {
  std::string out;
  for (Squat k : t.techniques) {
    if (!out.empty()) out.push_back('+');
    out += to_string(k);
  }
  return out;
}

}  // namespace

std::vector<DatasetEntry> build_ground_truth(const BrandSet& brands, const GeneratorTables& tables,
                                             const SuffixRuleSet& psl, const GroundTruthQuotas& quotas,
                                             std::uint64_t seed) {
  BaselineDetector detector(brands, tables, psl);
  std::vector<std::string> tlds = tables.tlds.empty() ? brands.suffixes() : tables.tlds;
  Rng rng(seed);
  std::unordered_set<std::string> used;
  std::vector<DatasetEntry> dataset;

  // Keep only candidates the detector resolves to the generating brand, so
  // dataset labels are unambiguous; record the detected subtype for typo rows.
  auto screen = [&](const std::string& raw, const Brand& b) -> std::optional<Verdict> {
    try {
      Fqdn f = parse_fqdn(normalize(raw), psl);
      auto v = detector.detect_with_hybrid(f);
      if (v && v->target == b.domain) return v;
      return std::nullopt;
    } catch (const ParseError&) {
      return std::nullopt;
    }
  };

  auto take = [&](const std::string& type, std::size_t quota, std::vector<PoolEntry>& pool) {
    if (quota == 0) return;
    auto picked = sample_pool(std::move(pool), quota, type, rng, used);
    dataset.insert(dataset.end(), picked.begin(), picked.end());
  };

  // typo
  if (quotas.typo > 0) {
    std::vector<PoolEntry> pool;
    const TypoSubtype subtypes[] = {TypoSubtype::MissingDot, TypoSubtype::Omission,
                                    TypoSubtype::Permutation, TypoSubtype::Replacement,
                                    TypoSubtype::Insertion};
    for (const auto& b : brands.brands()) {
      for (TypoSubtype sub : subtypes) {
        for (const auto& v : gen_typo(b.label, sub, tables.keyboard)) {
          std::string fqdn = v + "." + b.suffix;
          if (screen(fqdn, b)) pool.push_back({fqdn, std::string(to_string(sub)), b.domain});
        }
      }
    }
    take("typo", quotas.typo, pool);
  }

  // homo
  if (quotas.homo > 0) {
    std::vector<PoolEntry> pool;
    for (const auto& b : brands.brands()) {
      for (const auto& v : gen_homo(b.label, tables.confusables)) {
        std::string fqdn = v + "." + b.suffix;
        if (screen(fqdn, b)) pool.push_back({fqdn, "", b.domain});
      }
    }
    take("homo", quotas.homo, pool);
  }

  // bit
  if (quotas.bit > 0) {
    std::vector<PoolEntry> pool;
    for (const auto& b : brands.brands()) {
      for (const auto& v : gen_bit(b.label)) {
        std::string fqdn = v + "." + b.suffix;
        if (screen(fqdn, b)) pool.push_back({fqdn, "", b.domain});
      }
    }
    take("bit", quotas.bit, pool);
  }

  // sound
  if (quotas.sound > 0) {
    std::vector<PoolEntry> pool;
    for (const auto& b : brands.brands()) {
      for (const auto& v : gen_sound(b.label, tables.homophones)) {
        std::string fqdn = v + "." + b.suffix;
        if (screen(fqdn, b)) pool.push_back({fqdn, "", b.domain});
      }
    }
    take("sound", quotas.sound, pool);
  }

  // tld
  if (quotas.tld > 0) {
    std::vector<PoolEntry> pool;
    for (const auto& b : brands.brands()) {
      for (const auto& v : gen_tld(b.domain, tlds, psl)) {
        if (screen(v, b)) pool.push_back({v, "", b.domain});
      }
    }
    take("tld", quotas.tld, pool);
  }

  // combo
  if (quotas.combo > 0) {
    std::vector<PoolEntry> pool;
    for (const auto& b : brands.brands()) {
      for (const auto& v : gen_combo(b.label, tables.combo_words)) {
        std::string fqdn = v + "." + b.suffix;
        if (screen(fqdn, b)) pool.push_back({fqdn, "", b.domain});
      }
    }
    take("combo", quotas.combo, pool);
  }

  // level
  if (quotas.level > 0) {
    std::vector<PoolEntry> pool;
    std::size_t nfill = std::min<std::size_t>(8, tables.combo_words.size());
    for (const auto& b : brands.brands()) {
      for (std::size_t wi = 0; wi < nfill; ++wi) {
        for (const auto& t : tlds) {
          std::string fqdn = b.domain + "." + tables.combo_words[wi] + "." + t;
          auto v = screen(fqdn, b);
          if (v && v->type.kind == Squat::Level) pool.push_back({fqdn, "", b.domain});
        }
      }
    }
    take("level", quotas.level, pool);
  }

  // hybrid: recipes combine a confusable label with combo words, foreign
  // suffixes, and subdomain placement; entries must decompose to Hybrid.
  if (quotas.hybrid > 0) {
    std::vector<PoolEntry> pool;
    auto push_hybrid = [&](const std::string& fqdn, const Brand& b) {
      auto v = screen(fqdn, b);
      if (v && v->type.kind == Squat::Hybrid) {
        pool.push_back({fqdn, techniques_string(v->type), b.domain});
      }
    };
    std::size_t nwords = std::min<std::size_t>(4, tables.combo_words.size());
    for (const auto& b : brands.brands()) {
      auto homo_set = gen_homo(b.label, tables.confusables);
      std::vector<std::string> homos(homo_set.begin(), homo_set.end());
      std::size_t nh = std::min<std::size_t>(4, homos.size());
      for (std::size_t hi = 0; hi < nh; ++hi) {
        const std::string& h = homos[hi];
        if (h.starts_with("xn--")) continue;  // combo recipes need plain labels
        for (std::size_t wi = 0; wi < nwords; ++wi) {
          const std::string& w = tables.combo_words[wi];
          push_hybrid(h + "-" + w + "." + b.suffix, b);
          for (const auto& t : tlds) {
            if (t == b.suffix) continue;
            push_hybrid(h + "-" + w + "." + t, b);
            push_hybrid(h + "-" + w + ".domain." + t, b);
            push_hybrid(h + "." + b.suffix + ".domain." + t, b);
          }
        }
      }
    }
    take("hybrid", quotas.hybrid, pool);
  }

  // benign: brand subdomains plus screened random labels
  if (quotas.benign > 0) {
    std::vector<PoolEntry> pool;
    const char* prefixes[] = {"www", "mail", "login", "api", "shop", "blog",
                              "news", "m",    "app",   "store", "support", "dev"};
    for (const auto& b : brands.brands()) {
      for (const char* p : prefixes) {
        pool.push_back({std::string(p) + "." + b.domain, "", ""});
      }
    }
    const std::string consonants = "bcdfghjklmnpqrstvwxz";
    const std::string vowels = "aeiou";
    std::size_t attempts = 0;
    while (pool.size() < quotas.benign * 2 && attempts < quotas.benign * 50) {
      ++attempts;
      std::size_t syllables = 3 + rng.below(3);
      std::string label;
      for (std::size_t k = 0; k < syllables; ++k) {
        label += consonants[rng.below(consonants.size())];
        label += vowels[rng.below(vowels.size())];
      }
      if (rng.below(4) == 0) label += static_cast<char>('0' + rng.below(10));
      std::string fqdn = label + "." + tlds[rng.below(tlds.size())];
      try {
        Fqdn f = parse_fqdn(normalize(fqdn), psl);
        if (!detector.detect_with_hybrid(f)) pool.push_back({fqdn, "", ""});
      } catch (const ParseError&) {
      }
    }
    take("benign", quotas.benign, pool);
  }

  return dataset;
}

void write_dataset_jsonl(const std::vector<DatasetEntry>& entries, std::ostream& out) {
  for (const auto& e : entries) {
    nlohmann::ordered_json j{{"fqdn", e.fqdn}, {"type", e.type}, {"subtype", e.subtype}, {"target", e.target}};
    out << j.dump() << "\n";
  }
}

std::vector<DatasetEntry> load_dataset_jsonl(std::istream& in) {
  std::vector<DatasetEntry> out;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto j = nlohmann::json::parse(line);
    out.push_back({j.at("fqdn").get<std::string>(), j.at("type").get<std::string>(),
                   j.value("subtype", ""), j.value("target", "")});
  }
  return out;
}

}  // namespace squatscan::squatgen
