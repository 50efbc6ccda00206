#include "squatscan/psl.hpp"

#include <fstream>
#include <sstream>

#include "squatscan/util.hpp"

namespace squatscan {

SuffixRuleSet SuffixRuleSet::from_string(std::string_view text) {
  SuffixRuleSet rs;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    line = trim(line);
    if (line.empty() || line.starts_with("//")) continue;
    std::string rule = to_lower_ascii(line);
    if (rule.starts_with("!")) {
      rs.exceptions_.insert(rule.substr(1));
    } else if (rule.starts_with("*.")) {
      rs.wildcards_.insert(rule.substr(2));
    } else {
      rs.rules_.insert(std::move(rule));
    }
  }
  return rs;
}

SuffixRuleSet SuffixRuleSet::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open suffix rule file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

std::string SuffixRuleSet::public_suffix(std::string_view name) const {
  auto labels = split(name, '.');
  const std::size_t n = labels.size();

  // An exception rule wins outright; its public suffix is the rule minus
  // its leftmost label.
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> tail(labels.begin() + static_cast<long>(i), labels.end());
    std::string candidate = join(tail, '.');
    if (exceptions_.count(candidate)) {
      tail.erase(tail.begin());
      return join(tail, '.');
    }
  }

  // Otherwise the longest matching normal or wildcard rule.
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> tail(labels.begin() + static_cast<long>(i), labels.end());
    std::string candidate = join(tail, '.');
    if (rules_.count(candidate)) return candidate;
    if (tail.size() >= 2) {
      std::vector<std::string> parent(tail.begin() + 1, tail.end());
      if (wildcards_.count(join(parent, '.'))) return candidate;
    }
  }

  return labels.back();
}

}  // namespace squatscan
