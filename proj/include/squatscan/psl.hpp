#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>

namespace squatscan {

// Public-suffix rules in the standard list text format: one rule per line,
// "//" comments, "*." wildcards, "!" exceptions. Unknown TLDs fall back to
// treating the last label as the suffix.
class SuffixRuleSet {
 public:
  static SuffixRuleSet from_string(std::string_view text);
  static SuffixRuleSet from_file(const std::filesystem::path& path);

  // Longest matching public suffix for a normalized, lowercase name.
  // Never empty: at minimum the last label.
  std::string public_suffix(std::string_view name) const;

  bool has_rule(std::string_view suffix) const { return rules_.count(std::string(suffix)) > 0; }
  std::size_t rule_count() const { return rules_.size() + wildcards_.size() + exceptions_.size(); }

 private:
  std::unordered_set<std::string> rules_;
  std::unordered_set<std::string> wildcards_;   // "ck" for "*.ck"
  std::unordered_set<std::string> exceptions_;  // "www.ck" for "!www.ck"
};

}  // namespace squatscan
