#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "squatscan/domain.hpp"
#include "squatscan/psl.hpp"
#include "squatscan/tables.hpp"

namespace squatscan::squatgen {

struct Brand {
  std::string domain;  // registrable form, e.g. "amazon.com"
  std::string label;   // "amazon"
  std::string suffix;  // "com"
  std::uint32_t rank;
};

// Reference brands in Tranco CSV order. Labels are unique: when two entries
// share a label the better-ranked one owns the label index slot.
class BrandSet {
 public:
  static BrandSet from_tranco_csv(const std::filesystem::path& path, const SuffixRuleSet& psl);
  static BrandSet from_entries(const std::vector<std::pair<std::uint32_t, std::string>>& ranked,
                               const SuffixRuleSet& psl);

  const std::vector<Brand>& brands() const { return brands_; }
  const Brand* by_label(std::string_view label) const;
  bool contains_domain(std::string_view domain) const { return domains_.count(std::string(domain)) > 0; }
  // Distinct public suffixes in first-seen rank order.
  std::vector<std::string> suffixes() const;

 private:
  std::vector<Brand> brands_;
  std::unordered_map<std::string, std::size_t> label_index_;
  std::unordered_set<std::string> domains_;
};

struct GeneratorTables {
  KeyboardMap keyboard;
  ConfusableTable confusables;
  HomophoneTable homophones;
  std::vector<std::string> combo_words;
  std::vector<std::string> tlds;  // candidate suffixes for TLD squats

  static GeneratorTables load(const std::filesystem::path& data_dir);
};

// Generators. Every output is a valid hostname label (or registrable domain
// for gen_tld) and never equals the input.
std::set<std::string> gen_typo(const std::string& label, TypoSubtype subtype, const KeyboardMap& kb);
std::set<std::string> gen_bit(const std::string& label);
std::set<std::string> gen_homo(const std::string& label, const ConfusableTable& table);
std::set<std::string> gen_sound(const std::string& label, const HomophoneTable& homophones);
std::set<std::string> gen_tld(const std::string& registrable_domain, const std::vector<std::string>& tlds,
                              const SuffixRuleSet& psl);
std::set<std::string> gen_combo(const std::string& label, const std::vector<std::string>& words);

// Fires when `d` is not a brand label but contains one (length >= 4) with a
// non-empty residue once hyphens are stripped. Longest label wins, then rank.
std::optional<std::pair<const Brand*, std::string>> detect_combo(const Fqdn& fqdn, const BrandSet& brands);

// Fires when a brand's registrable form appears dot-bounded inside the
// subdomain and the name's own registrable form is not that brand.
const Brand* detect_level(const Fqdn& fqdn, const BrandSet& brands);

// Rule-based reimplementation of the published baseline detectors, plus the
// hybrid decomposition used by the mock oracle. Keeps references to the
// brand set and tables; both must outlive the detector.
class BaselineDetector {
 public:
  BaselineDetector(const BrandSet& brands, const GeneratorTables& tables, const SuffixRuleSet& psl);

  // Fixed precedence Typo, Bit, Homo, Sound, Tld, Level, Combo. Never Hybrid.
  std::optional<Verdict> detect(const Fqdn& fqdn) const;

  // detect() extended with hybrid decomposition: fires when at least two
  // techniques match after decomposing the label or a subdomain label.
  std::optional<Verdict> detect_with_hybrid(const Fqdn& fqdn) const;

  const BrandSet& brands() const { return *brands_; }
  const SuffixRuleSet& psl() const { return *psl_; }

 private:
  struct VariantHit {
    std::uint32_t brand_idx;
    std::optional<TypoSubtype> subtype;
  };

  std::optional<Verdict> hybrid_decompose(const Fqdn& fqdn) const;
  Verdict make_verdict(const Fqdn& fqdn, SquattingType type, const Brand& brand) const;

  const BrandSet* brands_;
  const GeneratorTables* tables_;
  const SuffixRuleSet* psl_;
  std::unordered_map<std::string, VariantHit> typo_;
  std::unordered_map<std::string, VariantHit> bit_;
  std::unordered_map<std::string, VariantHit> homo_;
  std::unordered_map<std::string, VariantHit> sound_;
};

struct GroundTruthQuotas {
  std::size_t typo = 0;
  std::size_t homo = 0;
  std::size_t bit = 0;
  std::size_t sound = 0;
  std::size_t tld = 0;
  std::size_t combo = 0;
  std::size_t level = 0;
  std::size_t hybrid = 0;
  std::size_t benign = 0;
};

struct DatasetEntry {
  std::string fqdn;
  std::string type;     // squat type name or "benign"
  std::string subtype;  // typo subtype or hybrid technique list, may be empty
  std::string target;   // empty for benign entries
};

// Seeded, deterministic dataset construction. Candidates whose detected
// target would be ambiguous (another brand wins) are discarded so labels are
// trustworthy; benign names are screened to not trip the detector at all.
// Throws when a quota exceeds generator capacity, naming the type.
std::vector<DatasetEntry> build_ground_truth(const BrandSet& brands, const GeneratorTables& tables,
                                             const SuffixRuleSet& psl, const GroundTruthQuotas& quotas,
                                             std::uint64_t seed);

void write_dataset_jsonl(const std::vector<DatasetEntry>& entries, std::ostream& out);
std::vector<DatasetEntry> load_dataset_jsonl(std::istream& in);

}  // namespace squatscan::squatgen
