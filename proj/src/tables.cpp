#include "squatscan/tables.hpp"

#include <fstream>
#include <limits>

#include "squatscan/util.hpp"

namespace squatscan {
namespace {

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open table file: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view v = trim(line);
    if (v.empty() || v.front() == '#') continue;
    lines.emplace_back(v);
  }
  return lines;
}

}  // namespace

KeyboardMap KeyboardMap::from_file(const std::filesystem::path& path) {
  KeyboardMap km;
  for (const auto& line : read_lines(path)) {
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab != 1) {
      throw ParseError("keyboard map line must be key<TAB>neighbors: " + line);
    }
    km.adj_[line[0]] = line.substr(tab + 1);
  }
  return km;
}

std::string_view KeyboardMap::neighbors(char key) const {
  auto it = adj_.find(key);
  return it == adj_.end() ? std::string_view{} : std::string_view(it->second);
}

ConfusableTable ConfusableTable::from_file(const std::filesystem::path& path) {
  ConfusableTable ct;
  for (const auto& line : read_lines(path)) {
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("confusable line must be a<TAB>b: " + line);
    std::string a = line.substr(0, tab);
    std::string b = line.substr(tab + 1);
    if (a.empty() || b.empty() || a == b) throw ParseError("bad confusable pair: " + line);
    ct.pairs_.push_back({a, b});
    ct.pairs_.push_back({b, a});
  }
  return ct;
}

namespace {

constexpr int kImpossible = 1 << 28;

// Alignment of `canon` against `cand` where a step either matches one
// identical byte or substitutes a confusable pair (from in canon, to in
// cand). Byte-level matching is exact for UTF-8 sequences. One memo serves
// every start offset, so containment scans stay cheap.
struct Aligner {
  std::string_view canon;
  std::string_view cand;
  const std::vector<ConfusableTable::Pair>& pairs;
  // pair indices applicable when canon[i] is the first byte of pair.from
  std::vector<std::vector<std::size_t>> pairs_at;
  // exact mode: minimal substitutions consuming both strings fully
  std::vector<int> exact_memo;
  // prefix mode: minimal substitutions consuming canon, ending anywhere in
  // cand; value packs (subs, end) with ties broken toward the longest end
  struct PrefixVal {
    int subs = kImpossible;
    std::size_t end = 0;
  };
  std::vector<PrefixVal> prefix_memo;
  std::vector<bool> prefix_seen;

  Aligner(std::string_view L, std::string_view c, const std::vector<ConfusableTable::Pair>& p)
      : canon(L), cand(c), pairs(p) {
    pairs_at.resize(L.size());
    for (std::size_t i = 0; i < L.size(); ++i) {
      for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
        if (canon.substr(i).starts_with(pairs[pi].from)) pairs_at[i].push_back(pi);
      }
    }
    exact_memo.assign((L.size() + 1) * (c.size() + 1), -1);
    prefix_memo.assign((L.size() + 1) * (c.size() + 1), {});
    prefix_seen.assign((L.size() + 1) * (c.size() + 1), false);
  }

  std::size_t idx(std::size_t i, std::size_t j) const { return i * (cand.size() + 1) + j; }

  int exact(std::size_t i, std::size_t j) {
    int& slot = exact_memo[idx(i, j)];
    if (slot >= 0) return slot;
    slot = kImpossible;
    if (i == canon.size()) return slot = (j == cand.size() ? 0 : kImpossible);
    int best = kImpossible;
    if (j < cand.size() && canon[i] == cand[j]) best = exact(i + 1, j + 1);
    for (std::size_t pi : pairs_at[i]) {
      const auto& p = pairs[pi];
      if (cand.substr(j).starts_with(p.to)) {
        int sub = exact(i + p.from.size(), j + p.to.size());
        if (sub + 1 < best) best = sub + 1;
      }
    }
    return slot = best;
  }

  PrefixVal prefix(std::size_t i, std::size_t j) {
    PrefixVal& slot = prefix_memo[idx(i, j)];
    if (prefix_seen[idx(i, j)]) return slot;
    prefix_seen[idx(i, j)] = true;
    if (i == canon.size()) {
      slot = {0, j};
      return slot;
    }
    PrefixVal best;
    auto consider = [&](PrefixVal v, int extra) {
      if (v.subs >= kImpossible) return;
      v.subs += extra;
      if (v.subs < best.subs || (v.subs == best.subs && v.end > best.end)) best = v;
    };
    if (j < cand.size() && canon[i] == cand[j]) consider(prefix(i + 1, j + 1), 0);
    for (std::size_t pi : pairs_at[i]) {
      const auto& p = pairs[pi];
      if (cand.substr(j).starts_with(p.to)) consider(prefix(i + p.from.size(), j + p.to.size()), 1);
    }
    slot = best;
    return slot;
  }

  bool anchored_at(std::size_t j) const {
    if (canon.empty()) return false;
    if (cand[j] == canon[0]) return true;
    for (std::size_t pi : pairs_at[0]) {
      if (cand.substr(j).starts_with(pairs[pi].to)) return true;
    }
    return false;
  }
};

}  // namespace

std::optional<int> ConfusableTable::align(std::string_view canonical,
                                          std::string_view candidate) const {
  if (canonical.empty() || candidate.empty()) return std::nullopt;
  Aligner a(canonical, candidate, pairs_);
  int subs = a.exact(0, 0);
  if (subs >= kImpossible) return std::nullopt;
  return subs;
}

std::optional<ConfusableTable::Containment> ConfusableTable::contains(
    std::string_view canonical, std::string_view candidate) const {
  if (canonical.empty() || candidate.empty()) return std::nullopt;
  Aligner a(canonical, candidate, pairs_);
  for (std::size_t start = 0; start < candidate.size(); ++start) {
    if (!a.anchored_at(start)) continue;
    auto v = a.prefix(0, start);
    if (v.subs >= kImpossible) continue;
    if (start == 0 && v.end == candidate.size()) continue;  // full match, not containment
    std::string residue;
    residue += candidate.substr(0, start);
    residue += candidate.substr(v.end);
    std::erase(residue, '-');
    if (residue.empty()) continue;
    return Containment{v.subs, residue};
  }
  return std::nullopt;
}

HomophoneTable HomophoneTable::from_file(const std::filesystem::path& path) {
  HomophoneTable ht;
  for (const auto& line : read_lines(path)) {
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("homophone line must be a<TAB>b: " + line);
    std::string token = line.substr(0, tab);
    std::string alt = line.substr(tab + 1);
    if (token.empty() || alt.empty() || token == alt) throw ParseError("bad homophone pair: " + line);
    ht.by_token_[token].push_back(alt);
    ht.max_token_ = std::max(ht.max_token_, token.size());
  }
  return ht;
}

std::vector<std::string> load_word_list(const std::filesystem::path& path) { return read_lines(path); }

}  // namespace squatscan
