#include "squatscan/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "squatscan/util.hpp"

namespace squatscan::ingest {
namespace {

std::optional<std::string> normalized_or_none(std::string name) {
  // wildcard certificate names cover the parent domain
  while (name.starts_with("*.")) name.erase(0, 2);
  try {
    return normalize(name);
  } catch (const ParseError&) {
    return std::nullopt;
  }
}

bool looks_like_ipv4(std::string_view s) {
  int parts = 0;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t dot = s.find('.', pos);
    std::string_view part = s.substr(pos, dot == std::string_view::npos ? std::string_view::npos : dot - pos);
    if (part.empty() || part.size() > 3) return false;
    int v = 0;
    for (char c : part) {
      if (c < '0' || c > '9') return false;
      v = v * 10 + (c - '0');
    }
    if (v > 255) return false;
    ++parts;
    if (dot == std::string_view::npos) break;
    pos = dot + 1;
  }
  return parts == 4;
}

bool looks_like_ipv6(std::string_view s) { return !s.empty() && s.find(':') != std::string_view::npos; }

std::optional<std::int64_t> parse_ts(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::int64_t v = 0;
  for (char c : s) {
    if (c == '.') break;  // fractional timestamps truncate
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + (c - '0');
  }
  return v;
}

}  // namespace

std::vector<FeedRecord> parse_ct_stream(std::istream& in, FeedStats& stats) {
  std::vector<FeedRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    ++stats.lines;
    std::string_view v = trim(line);
    if (v.empty()) {
      ++stats.skipped;
      continue;
    }
    nlohmann::json j = nlohmann::json::parse(v, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("all_domains") ||
        !j["all_domains"].is_array()) {
      ++stats.skipped;
      continue;
    }
    std::int64_t ts = 0;
    if (j.contains("timestamp") && j["timestamp"].is_number()) {
      ts = j["timestamp"].get<std::int64_t>();
    }
    std::set<std::string> names;
    for (const auto& item : j["all_domains"]) {
      if (!item.is_string()) continue;
      if (auto n = normalized_or_none(item.get<std::string>())) names.insert(*n);
    }
    ++stats.ok;
    for (const auto& n : names) out.push_back({n, FeedSource::CtLog, {}, ts});
  }
  return out;
}

std::vector<FeedRecord> parse_zone_stream(std::istream& in, std::string origin, FeedStats& stats,
                                          std::int64_t observed_at) {
  std::vector<FeedRecord> out;
  std::unordered_map<std::string, std::size_t> index;  // name -> out position
  std::string origin_norm;
  if (auto n = normalized_or_none(origin)) origin_norm = *n;

  auto qualify = [&](std::string_view name) -> std::optional<std::string> {
    if (name == "@") return origin_norm.empty() ? std::nullopt : std::optional(origin_norm);
    if (name.ends_with(".")) return normalized_or_none(std::string(name));
    if (origin_norm.empty()) return std::nullopt;
    return normalized_or_none(std::string(name) + "." + origin_norm);
  };

  std::string line;
  while (std::getline(in, line)) {
    ++stats.lines;
    if (auto sc = line.find(';'); sc != std::string::npos) line.resize(sc);
    std::string_view v = trim(line);
    if (v.empty()) {
      ++stats.skipped;
      continue;
    }
    // continuation lines (leading whitespace owners) are outside the subset
    if (line[0] == ' ' || line[0] == '\t') {
      ++stats.skipped;
      continue;
    }

    std::vector<std::string> tokens;
    for (auto& t : split(std::string(v), ' ')) {
      for (auto& t2 : split(t, '\t')) {
        if (!std::string_view(trim(t2)).empty()) tokens.emplace_back(trim(t2));
      }
    }
    if (tokens.empty()) {
      ++stats.skipped;
      continue;
    }

    if (tokens[0] == "$ORIGIN") {
      if (tokens.size() >= 2) {
        if (auto n = normalized_or_none(tokens[1])) {
          origin_norm = *n;
          ++stats.ok;
          continue;
        }
      }
      ++stats.skipped;
      continue;
    }
    if (tokens[0].starts_with("$")) {  // $TTL and friends
      ++stats.ok;
      continue;
    }

    // name [TTL] [class] type rdata — TTL and class in either order
    std::size_t i = 1;
    auto is_ttl = [](const std::string& t) {
      return !t.empty() && std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; });
    };
    auto is_class = [](const std::string& t) { return t == "IN" || t == "CH" || t == "HS"; };
    while (i < tokens.size() && (is_ttl(tokens[i]) || is_class(tokens[i]))) ++i;
    if (i >= tokens.size()) {
      ++stats.skipped;
      continue;
    }
    std::string type = to_lower_ascii(tokens[i]);
    if (type != "ns" && type != "a" && type != "aaaa") {
      ++stats.skipped;  // unsupported record type
      continue;
    }
    if (i + 1 >= tokens.size()) {
      ++stats.skipped;  // missing rdata
      continue;
    }
    const std::string& rdata = tokens[i + 1];
    bool rdata_ok = (type == "ns" && normalized_or_none(rdata).has_value()) ||
                    (type == "a" && looks_like_ipv4(rdata)) ||
                    (type == "aaaa" && looks_like_ipv6(rdata));
    if (!rdata_ok) {
      ++stats.skipped;
      continue;
    }
    auto name = qualify(tokens[0]);
    if (!name) {
      ++stats.skipped;
      continue;
    }
    RrType rr = type == "ns" ? RrType::Ns : (type == "a" ? RrType::A : RrType::Aaaa);
    auto [it, inserted] = index.emplace(*name, out.size());
    if (inserted) {
      out.push_back({*name, FeedSource::Zone, {}, observed_at});
    }
    out[it->second].rr_types.add(rr);
    ++stats.ok;
  }
  return out;
}

std::vector<FeedRecord> parse_pdns_stream(std::istream& in, FeedStats& stats) {
  std::vector<FeedRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    ++stats.lines;
    if (std::string_view(trim(line)).empty()) {
      ++stats.skipped;
      continue;
    }
    auto cols = split(line, '\t');
    if (cols.size() != 4) {
      ++stats.skipped;
      continue;
    }
    std::string type = to_lower_ascii(trim(cols[1]));
    if (type != "ns" && type != "a" && type != "aaaa") {
      ++stats.skipped;  // unsupported record kind
      continue;
    }
    auto ts = parse_ts(trim(cols[3]));
    auto name = normalized_or_none(std::string(trim(cols[0])));
    if (!ts || !name) {
      ++stats.skipped;
      continue;
    }
    RrType rr = type == "ns" ? RrType::Ns : (type == "a" ? RrType::A : RrType::Aaaa);
    FeedRecord rec{*name, FeedSource::Pdns, {}, *ts};
    rec.rr_types.add(rr);
    out.push_back(std::move(rec));
    ++stats.ok;
  }
  return out;
}

std::vector<Fqdn> filter_active(const std::vector<FeedRecord>& records, const SuffixRuleSet& psl) {
  std::map<std::string, RrSet> merged;
  for (const auto& r : records) merged[r.fqdn].merge(r.rr_types);

  std::vector<Fqdn> out;
  for (const auto& [name, rrs] : merged) {
    if (!rrs.has(RrType::A) && !rrs.has(RrType::Aaaa)) continue;
    Fqdn f;
    try {
      f = parse_fqdn(name, psl);
    } catch (const ParseError&) {
      continue;  // bare suffixes and other unsplittable names
    }
    // NS may be delegated at the name itself or any ancestor down to the
    // registrable domain.
    bool has_ns = false;
    std::string cursor = name;
    std::string reg = registrable(f);
    while (true) {
      auto it = merged.find(cursor);
      if (it != merged.end() && it->second.has(RrType::Ns)) {
        has_ns = true;
        break;
      }
      if (cursor == reg) break;
      auto dot = cursor.find('.');
      if (dot == std::string::npos) break;
      cursor = cursor.substr(dot + 1);
    }
    if (has_ns) out.push_back(std::move(f));
  }
  return out;  // map iteration is already name-sorted
}

std::map<std::string, std::int64_t> first_seen_times(const std::vector<FeedRecord>& records) {
  std::map<std::string, std::int64_t> out;
  for (const auto& r : records) {
    auto [it, inserted] = out.emplace(r.fqdn, r.observed_at);
    if (!inserted && r.observed_at < it->second) it->second = r.observed_at;
  }
  return out;
}

ObservationStore::ObservationStore(std::filesystem::path file) : file_(std::move(file)) {
  std::ifstream in(file_);
  if (!in) return;  // first run
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (std::string_view(trim(line)).empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw IoError("observation store corrupt at line " + std::to_string(lineno) + ": " +
                    file_.string());
    }
    auto ts = parse_ts(trim(std::string_view(line).substr(tab + 1)));
    if (!ts) {
      throw IoError("observation store corrupt at line " + std::to_string(lineno) + ": " +
                    file_.string());
    }
    seen_[line.substr(0, tab)] = *ts;
  }
}

void ObservationStore::save(const std::map<std::string, std::int64_t>& merged) const {
  std::filesystem::path tmp = file_;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot write observation store: " + tmp.string());
    for (const auto& [name, ts] : merged) out << name << '\t' << ts << '\n';
    if (!out) throw IoError("failed writing observation store: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, file_, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot replace observation store: " + file_.string());
  }
}

std::vector<std::string> ObservationStore::new_observed(
    const std::map<std::string, std::int64_t>& current) {
  std::vector<std::string> fresh;
  for (const auto& [name, ts] : current) {
    (void)ts;
    if (!seen_.count(name)) fresh.push_back(name);
  }
  if (fresh.empty()) return fresh;

  std::map<std::string, std::int64_t> merged = seen_;
  for (const auto& name : fresh) merged[name] = current.at(name);
  save(merged);  // throws without touching memory
  seen_ = std::move(merged);
  return fresh;
}

}  // namespace squatscan::ingest
