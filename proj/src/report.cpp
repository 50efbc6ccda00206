#include "squatscan/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "squatscan/util.hpp"

namespace squatscan::report {

VerdictRecord to_record(const Verdict& verdict, std::size_t chunk, int attempts) {
  VerdictRecord r;
  r.input = verdict.fqdn.raw;
  r.s = verdict.fqdn.s;
  r.d = verdict.fqdn.d;
  r.sx = verdict.fqdn.sx;
  r.type = std::string(to_string(verdict.type.kind));
  r.target = verdict.target;
  r.chunk = chunk;
  r.attempts = attempts;
  switch (verdict.source) {
    case VerdictSource::Llm: r.source = "llm"; break;
    case VerdictSource::Baseline: r.source = "baseline"; break;
    case VerdictSource::Oracle: r.source = "oracle"; break;
  }
  return r;
}

std::size_t emit_verdicts(std::vector<VerdictRecord> records, std::ostream& out) {
  std::sort(records.begin(), records.end(), [](const VerdictRecord& a, const VerdictRecord& b) {
    return std::tie(a.input, a.type, a.target) < std::tie(b.input, b.type, b.target);
  });
  for (const auto& r : records) {
    nlohmann::ordered_json j{{"input", r.input}, {"s", r.s},           {"d", r.d},
                             {"sx", r.sx},       {"type", r.type},     {"target", r.target},
                             {"chunk", r.chunk}, {"attempts", r.attempts}, {"source", r.source}};
    out << j.dump() << "\n";
  }
  return records.size();
}

std::vector<VerdictRecord> load_verdicts_jsonl(std::istream& in) {
  std::vector<VerdictRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto j = nlohmann::json::parse(line);
    VerdictRecord r;
    r.input = j.at("input").get<std::string>();
    r.s = j.value("s", "");
    r.d = j.at("d").get<std::string>();
    r.sx = j.at("sx").get<std::string>();
    r.type = j.at("type").get<std::string>();
    r.target = j.at("target").get<std::string>();
    r.chunk = j.value("chunk", std::size_t{0});
    r.attempts = j.value("attempts", 0);
    r.source = j.value("source", "");
    out.push_back(std::move(r));
  }
  return out;
}

CostTable CostTable::defaults() {
  CostTable t;
  t.models_ = {{"gpt-3.5", 0.50, 1.50}, {"gpt-4o", 5.00, 15.00}, {"llama-3-70b", 0.59, 0.79}};
  return t;
}

CostTable CostTable::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open cost model file: " + path.string());
  CostTable t;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view v = trim(line);
    if (v.empty() || v.front() == '#') continue;
    auto eq = v.find('=');
    if (eq == std::string_view::npos) throw ParseError("cost model line must be name = in out: " + line);
    std::string name(trim(v.substr(0, eq)));
    auto rates = split(std::string(trim(v.substr(eq + 1))), ' ');
    std::erase_if(rates, [](const std::string& r) { return r.empty(); });
    if (rates.size() != 2) throw ParseError("cost model needs two rates: " + line);
    t.models_.push_back({name, std::stod(rates[0]), std::stod(rates[1])});
  }
  return t;
}

std::optional<CostModel> CostTable::find(const std::string& name) const {
  for (const auto& m : models_) {
    if (m.name == name) return m;
  }
  return std::nullopt;
}

double estimate_cost_usd(std::int64_t input_tokens, std::int64_t output_tokens,
                         const CostModel& model) {
  double usd = static_cast<double>(input_tokens) / 1e6 * model.input_per_mtok +
               static_cast<double>(output_tokens) / 1e6 * model.output_per_mtok;
  return std::round(usd * 100.0) / 100.0;
}

std::size_t bucket_of(std::optional<std::uint32_t> rank) {
  if (!rank || *rank >= 1000000) return 4;
  if (*rank < 1000) return 0;
  if (*rank < 10000) return 1;
  if (*rank < 100000) return 2;
  return 3;
}

RunSummary summarize(const std::vector<VerdictRecord>& records,
                     const std::map<std::string, std::uint32_t>& reference_ranks,
                     std::size_t chunks_accepted, std::size_t chunks_rejected,
                     trv::TokenTotals tokens, const std::optional<CostModel>& cost) {
  RunSummary s;
  s.verdicts = records.size();
  s.chunks_accepted = chunks_accepted;
  s.chunks_rejected = chunks_rejected;
  s.tokens = tokens;
  for (const auto& r : records) {
    s.by_type[r.type]++;
    auto it = reference_ranks.find(r.target);
    s.buckets[bucket_of(it == reference_ranks.end()
                            ? std::nullopt
                            : std::optional<std::uint32_t>(it->second))]++;
  }
  if (cost) {
    s.cost_usd = estimate_cost_usd(tokens.input, tokens.output, *cost);
    s.cost_model = cost->name;
  }
  return s;
}

namespace {

std::string pct(std::size_t part, std::size_t whole) {
  double p = whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(whole);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%.1f%%", p);
  return buf;
}

}  // namespace

std::string render_summary_text(const RunSummary& s) {
  std::string out;
  char buf[128];
  out += "squatting type      count  share\n";
  static const char* kTypes[] = {"typo", "homo", "bit", "sound", "tld", "combo", "level", "hybrid"};
  for (const char* ty : kTypes) {
    auto it = s.by_type.find(ty);
    std::size_t n = it == s.by_type.end() ? 0 : it->second;
    std::snprintf(buf, sizeof(buf), "%-18s %6zu  %s\n", ty, n, pct(n, s.verdicts).c_str());
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "%-18s %6zu\n", "total", s.verdicts);
  out += buf;

  out += "\ntargeted rank       count  share\n";
  for (std::size_t i = 0; i < s.buckets.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%-18s %6zu  %s\n", kBucketLabels[i], s.buckets[i],
                  pct(s.buckets[i], s.verdicts).c_str());
    out += buf;
  }

  std::snprintf(buf, sizeof(buf), "\nchunks: accepted=%zu rejected=%zu\n", s.chunks_accepted,
                s.chunks_rejected);
  out += buf;
  std::snprintf(buf, sizeof(buf), "tokens: input=%lld output=%lld\n",
                static_cast<long long>(s.tokens.input), static_cast<long long>(s.tokens.output));
  out += buf;
  if (s.cost_usd) {
    std::snprintf(buf, sizeof(buf), "cost: $%.2f (%s)\n", *s.cost_usd, s.cost_model.c_str());
    out += buf;
  }
  return out;
}

nlohmann::ordered_json summary_to_json(const RunSummary& s) {
  nlohmann::ordered_json types = nlohmann::ordered_json::object();
  for (const auto& [ty, n] : s.by_type) types[ty] = n;
  nlohmann::ordered_json buckets = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < s.buckets.size(); ++i) buckets[kBucketLabels[i]] = s.buckets[i];
  nlohmann::ordered_json j{
      {"verdicts", s.verdicts},
      {"by_type", types},
      {"target_rank_buckets", buckets},
      {"chunks", {{"accepted", s.chunks_accepted}, {"rejected", s.chunks_rejected}}},
      {"tokens", {{"input", s.tokens.input}, {"output", s.tokens.output}}},
  };
  if (s.cost_usd) {
    j["cost_usd"] = *s.cost_usd;
    j["cost_model"] = s.cost_model;
  }
  return j;
}

}  // namespace squatscan::report
