#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace squatscan {

// QWERTY (or other) key adjacency used by the typo generator.
class KeyboardMap {
 public:
  static KeyboardMap from_file(const std::filesystem::path& path);
  std::string_view neighbors(char key) const;

 private:
  std::unordered_map<char, std::string> adj_;
};

// Confusable sequence pairs, e.g. "m" <-> "rn" or Latin "a" <-> Cyrillic "а".
// The file lists canonical<TAB>confusable; both directions are indexed and no
// pair is an identity.
class ConfusableTable {
 public:
  struct Pair {
    std::string from;
    std::string to;
  };

  static ConfusableTable from_file(const std::filesystem::path& path);

  // All directed pairs (canonical->confusable and the reverse).
  const std::vector<Pair>& pairs() const { return pairs_; }

  // Can `candidate` be derived from `canonical` by substituting confusable
  // sequences? Returns the minimal substitution count (0 means the strings
  // are equal). Both inputs are UTF-8.
  std::optional<int> align(std::string_view canonical, std::string_view candidate) const;

  // Finds a substring of `candidate` that aligns with `canonical` using at
  // least zero substitutions, leaving a non-empty residue once hyphens are
  // stripped. Returns {substitutions, residue} for the leftmost such match.
  struct Containment {
    int substitutions;
    std::string residue;
  };
  std::optional<Containment> contains(std::string_view canonical, std::string_view candidate) const;

 private:
  std::vector<Pair> pairs_;
};

// Homophone token pairs applied by a greedy longest-match scan.
class HomophoneTable {
 public:
  static HomophoneTable from_file(const std::filesystem::path& path);
  const std::map<std::string, std::vector<std::string>>& by_token() const { return by_token_; }
  std::size_t max_token_length() const { return max_token_; }

 private:
  std::map<std::string, std::vector<std::string>> by_token_;
  std::size_t max_token_ = 0;
};

std::vector<std::string> load_word_list(const std::filesystem::path& path);

}  // namespace squatscan
