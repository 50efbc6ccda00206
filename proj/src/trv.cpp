#include "squatscan/trv.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <set>
#include <thread>

#include <json.hpp>

#include "squatscan/util.hpp"

namespace squatscan::trv {

MustPassSelector::MustPassSelector(const squatgen::BaselineDetector& detector,
                                   std::size_t pool_limit) {
  const auto& brands = detector.brands().brands();
  const SuffixRuleSet& psl = detector.psl();
  std::size_t limit = std::min(pool_limit, brands.size());
  for (std::size_t bi = 0; bi < limit; ++bi) {
    const squatgen::Brand& b = brands[bi];
    std::optional<Fqdn> squat;
    for (std::size_t i = 0; i + 1 < b.label.size(); ++i) {
      std::string v = b.label;
      std::swap(v[i], v[i + 1]);
      if (v == b.label || !is_valid_variant_label(v)) continue;
      if (detector.brands().by_label(v) != nullptr) continue;
      Fqdn f;
      try {
        f = parse_fqdn(normalize(v + "." + b.suffix), psl);
      } catch (const ParseError&) {
        continue;
      }
      auto verdict = detector.detect(f);
      if (verdict && verdict->target == b.domain) {
        squat = f;
        break;
      }
    }
    if (!squat) continue;  // no unambiguous permutation for this brand
    Fqdn benign = parse_fqdn(normalize(b.domain), psl);
    pool_.push_back({std::move(benign), std::move(*squat), b.domain});
  }
  if (pool_.size() < 4) {
    throw std::invalid_argument("must-pass pool needs at least 4 usable brands, have " +
                                std::to_string(pool_.size()));
  }
}

std::array<MustPassEntry, 4> MustPassSelector::select(std::size_t chunk_id,
                                                      const std::set<std::string>& exclude_raws) const {
  std::array<MustPassEntry, 4> out;
  std::set<std::string> picked_brands;
  std::size_t found = 0;
  for (std::size_t step = 0; step < pool_.size() && found < 4; ++step) {
    const PoolEntry& p = pool_[(chunk_id * 4 + step) % pool_.size()];
    if (picked_brands.count(p.domain)) continue;
    if (exclude_raws.count(p.benign.raw) || exclude_raws.count(p.squat.raw)) continue;
    picked_brands.insert(p.domain);
    if (found < 2) {
      out[found] = MustPassEntry{p.benign, std::nullopt, p.domain};
    } else {
      out[found] = MustPassEntry{p.squat, p.domain, p.domain};
    }
    ++found;
  }
  if (found < 4) {
    throw std::invalid_argument("must-pass pool exhausted for chunk " + std::to_string(chunk_id));
  }
  return out;
}

AugmentedChunk inject(const dnx::Chunk& chunk, const std::array<MustPassEntry, 4>& entries) {
  AugmentedChunk aug;
  aug.chunk_id = chunk.id;
  aug.original = chunk.pairs;

  const std::size_t n = chunk.pairs.size();
  // Block of pairs consumed before each injection. A full 100-pair chunk
  // reproduces the fixed 26/51/76/101 placement; smaller chunks space the
  // entries after every ceil(n/4) pairs.
  std::array<std::size_t, 4> blocks;
  if (n == 100) {
    blocks = {25, 24, 24, 24};
  } else {
    std::size_t b = (n + 3) / 4;
    blocks = {b, b, b, b};
  }

  std::size_t pair_idx = 0;
  std::size_t entry_idx = 0;
  for (std::size_t block : blocks) {
    for (std::size_t k = 0; k < block && pair_idx < n; ++k) {
      aug.entries.push_back(chunk.pairs[pair_idx++].input);
    }
    aug.injected.emplace_back(aug.entries.size() + 1, entries[entry_idx]);
    aug.entries.push_back(entries[entry_idx].fqdn);
    ++entry_idx;
  }
  while (pair_idx < n) aug.entries.push_back(chunk.pairs[pair_idx++].input);

  for (const auto& p : chunk.pairs) {
    if (std::find(aug.references.begin(), aug.references.end(), p.proximate) ==
        aug.references.end()) {
      aug.references.push_back(p.proximate);
    }
  }
  return aug;
}

std::vector<std::string> strip(const AugmentedChunk& aug) {
  std::set<std::size_t> positions;
  for (const auto& [pos, entry] : aug.injected) positions.insert(pos);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < aug.entries.size(); ++i) {
    if (positions.count(i + 1)) continue;
    out.push_back(aug.entries[i].raw);
  }
  return out;
}

FeedbackTemplates FeedbackTemplates::defaults() {
  FeedbackTemplates t;
  t.f1 =
      "The previous response was not a single valid JSON array whose objects have exactly the "
      "keys s, d, sx, type, l. Respond with exactly one JSON array and no surrounding prose.";
  t.f2 =
      "The previous response included domains that do not appear in the input list. Re-examine "
      "the input domains thoroughly and report only domains taken verbatim from the input.";
  t.f3 =
      "Some domains in the previous response were misclassified. Review every input domain again "
      "carefully and check each one against all squatting criteria before deciding.";
  t.f4 =
      "The previous response named targeted legitimate domains whose existence could not be "
      "verified. Only name targeted legitimate domains that you are confident exist.";
  t.transport = "transport";
  return t;
}

FeedbackTemplates FeedbackTemplates::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open feedback templates: " + path.string());
  FeedbackTemplates t = defaults();
  std::string line;
  while (std::getline(in, line)) {
    std::string_view v = trim(line);
    if (v.empty() || v.front() == '#') continue;
    auto eq = v.find('=');
    if (eq == std::string_view::npos) continue;
    std::string key(trim(v.substr(0, eq)));
    std::string value(trim(v.substr(eq + 1)));
    if (key == "f1") t.f1 = value;
    else if (key == "f2") t.f2 = value;
    else if (key == "f3") t.f3 = value;
    else if (key == "f4") t.f4 = value;
    else if (key == "transport") t.transport = value;
  }
  return t;
}

OfflineChecker::OfflineChecker(const dnx::ReferenceIndex& index, std::vector<std::string> allowlist)
    : index_(&index), allowlist_(allowlist.begin(), allowlist.end()) {}

bool OfflineChecker::exists(const std::string& registrable_domain) const {
  return index_->contains_domain(registrable_domain) || allowlist_.count(registrable_domain) > 0;
}

std::string_view to_string(ValidationStatus s) {
  switch (s) {
    case ValidationStatus::Accepted: return "accepted";
    case ValidationStatus::FormatError: return "format_error";
    case ValidationStatus::ConsistencyError: return "consistency_error";
    case ValidationStatus::MustPassError: return "must_pass_error";
    case ValidationStatus::TargetExistenceError: return "target_existence_error";
    case ValidationStatus::TransportError: return "transport_error";
  }
  return "unknown";
}

llm::LlmRequest build_prompt(const AugmentedChunk& aug,
                             const std::vector<std::pair<int, std::string>>& feedback_history) {
  std::string p;
  p +=
      "# Task Description\n"
      "You are a security analyst specialized in identifying domain squatting. Analyze the "
      "following list of domain names to assess potential squatting risks.\n"
      "Each input domain is a structured record. For example, amazon.com.example.com is divided "
      "into {\"s\": \"amazon.com\", \"d\": \"example\", \"sx\": \"com\"} where s is the "
      "subdomain, d is the domain, and sx is the public suffix.\n"
      "Using your knowledge of legitimate domains and the additional references below, generate "
      "a JSON report covering only the domains that show squatting risk.\n"
      "\n"
      "# Analysis Criteria\n"
      "Apply the following criteria to each domain to identify squatting:\n"
      "1. Typo-squatting: misspellings of a target domain, including keyboard-proximity "
      "replacements, character omission, transposition, insertion, and missing dots.\n"
      "   - Example: {\"d\": \"faecbook\", \"sx\": \"com\"} targeting facebook.com.\n"
      "2. Homograph-squatting: visually confusable characters or sequences in place of the "
      "target's characters.\n"
      "   - Example: {\"d\": \"exarnple\", \"sx\": \"com\"} targeting example.com.\n"
      "3. Bit-squatting: the name differs from the target by a single flipped bit in one "
      "character.\n"
      "   - Example: {\"d\": \"exemple\", \"sx\": \"com\"} targeting example.com.\n"
      "4. Sound-squatting: homophones replacing part of the target name.\n"
      "   - Example: {\"d\": \"eggsample\", \"sx\": \"com\"} targeting example.com.\n"
      "5. TLD-squatting: the target's name under a different public suffix.\n"
      "   - Example: {\"d\": \"example\", \"sx\": \"shop\"} targeting example.com.\n"
      "6. Combo-squatting: the target name combined with additional words or characters.\n"
      "   - Example: {\"d\": \"example-secure\", \"sx\": \"com\"} targeting example.com.\n"
      "7. Level-squatting: the target domain embedded inside the subdomain.\n"
      "   - Example: {\"s\": \"example.com\", \"d\": \"domain\", \"sx\": \"example\"} targeting "
      "example.com.\n"
      "8. Hybrid-squatting: combining multiple squatting techniques.\n"
      "   - Example: {\"s\": \"amazeon-auth\", \"d\": \"example\", \"sx\": \"top\"} targeting "
      "amazon.com.\n"
      "\n"
      "# Output Specification\n"
      "Respond with exactly one JSON array and nothing else. Each element must be an object "
      "with exactly the keys s, d, sx, type, l:\n"
      "- s, d, sx: copied verbatim from the input record\n"
      "- type: the most likely squatting type, one of typo, homo, bit, sound, tld, combo, "
      "level, hybrid\n"
      "- l: the targeted legitimate registrable domain, e.g. amazon.com\n"
      "Report only domains with squatting risk; respond with [] when there are none.\n"
      "\n"
      "# Additional Legitimate Domains\n"
      "Use the following legitimate domains in addition to your knowledge:\n";
  for (const auto& ref : aug.references) {
    p += "- " + ref + "\n";
  }

  if (!feedback_history.empty()) {
    p += "\n# Reviewer Feedback\n";
    for (const auto& [attempt, text] : feedback_history) {
      p += "- attempt " + std::to_string(attempt) + ": " + text + "\n";
    }
  }

  p += "\n# Input Domains\n";
  nlohmann::ordered_json records = nlohmann::ordered_json::array();
  for (const auto& f : aug.entries) records.push_back(to_structured(f));
  p += records.dump();
  p += "\n";

  llm::LlmRequest req;
  req.system_text = "You are a security analyst specialized in identifying domain squatting.";
  req.user_text = std::move(p);
  return req;
}

std::optional<std::vector<Finding>> validate_format(const std::string& response_text) {
  std::string_view v = trim(response_text);
  // tolerate surrounding code fences only
  if (v.starts_with("```")) {
    auto nl = v.find('\n');
    if (nl == std::string_view::npos) return std::nullopt;
    v.remove_prefix(nl + 1);
    auto fence = v.rfind("```");
    if (fence == std::string_view::npos) return std::nullopt;
    v = trim(v.substr(0, fence));
  }
  auto j = nlohmann::json::parse(v, nullptr, false);
  if (j.is_discarded() || !j.is_array()) return std::nullopt;

  std::vector<Finding> out;
  for (const auto& item : j) {
    if (!item.is_object() || item.size() != 5) return std::nullopt;
    for (const char* key : {"s", "d", "sx", "type", "l"}) {
      if (!item.contains(key) || !item[key].is_string()) return std::nullopt;
    }
    Finding f{item["s"].get<std::string>(), item["d"].get<std::string>(),
              item["sx"].get<std::string>(), item["type"].get<std::string>(),
              item["l"].get<std::string>()};
    if (!squat_from_string(f.type)) return std::nullopt;
    out.push_back(std::move(f));
  }
  return out;
}

namespace {

std::string finding_key(const std::string& s, const std::string& d, const std::string& sx) {
  return s + "\x1f" + d + "\x1f" + sx;
}

std::optional<std::string> normalized_registrable(const std::string& name) {
  try {
    std::string norm = normalize(name);
    return norm;
  } catch (const ParseError&) {
    return std::nullopt;
  }
}

}  // namespace

bool check_consistency(std::vector<Finding>& findings, const AugmentedChunk& aug) {
  std::set<std::string> inputs;
  for (const auto& f : aug.entries) inputs.insert(finding_key(f.s, f.d, f.sx));

  std::set<std::string> seen;
  std::vector<Finding> dedup;
  for (auto& f : findings) {
    std::string key = finding_key(f.s, f.d, f.sx);
    if (!inputs.count(key)) return false;
    if (seen.insert(key).second) dedup.push_back(std::move(f));
  }
  findings = std::move(dedup);
  return true;
}

bool verify_must_pass(const std::vector<Finding>& findings, const AugmentedChunk& aug) {
  std::map<std::string, const Finding*> by_key;
  for (const auto& f : findings) by_key.emplace(finding_key(f.s, f.d, f.sx), &f);

  for (const auto& [pos, entry] : aug.injected) {
    (void)pos;
    auto it = by_key.find(finding_key(entry.fqdn.s, entry.fqdn.d, entry.fqdn.sx));
    if (entry.is_squat()) {
      if (it == by_key.end()) return false;  // false negative
      auto target = normalized_registrable(it->second->l);
      if (!target || *target != *entry.squat_target) return false;
    } else {
      if (it != by_key.end()) return false;  // false positive on a legitimate domain
    }
  }
  return true;
}

bool verify_targets(const std::vector<Finding>& findings, const dnx::ReferenceIndex& index,
                    const TargetChecker& checker) {
  for (const auto& f : findings) {
    auto target = normalized_registrable(f.l);
    if (!target) return false;
    if (index.contains_domain(*target)) continue;
    if (!checker.exists(*target)) return false;
  }
  return true;
}

ValidationOutcome run_validators(const std::string& response_text, const AugmentedChunk& aug,
                                 const dnx::ReferenceIndex& index, const TargetChecker& checker,
                                 const FeedbackTemplates& templates) {
  ValidationOutcome out;

  auto findings = validate_format(response_text);
  if (!findings) {
    out.status = ValidationStatus::FormatError;
    out.feedback = templates.f1;
    return out;
  }
  if (!check_consistency(*findings, aug)) {
    out.status = ValidationStatus::ConsistencyError;
    out.feedback = templates.f2;
    return out;
  }
  if (!verify_must_pass(*findings, aug)) {
    out.status = ValidationStatus::MustPassError;
    out.feedback = templates.f3;
    return out;
  }
  if (!verify_targets(*findings, index, checker)) {
    out.status = ValidationStatus::TargetExistenceError;
    out.feedback = templates.f4;
    return out;
  }

  out.status = ValidationStatus::Accepted;
  std::set<std::string> injected_keys;
  for (const auto& [pos, entry] : aug.injected) {
    (void)pos;
    injected_keys.insert(finding_key(entry.fqdn.s, entry.fqdn.d, entry.fqdn.sx));
  }
  std::map<std::string, const Fqdn*> input_by_key;
  for (const auto& f : aug.entries) input_by_key.emplace(finding_key(f.s, f.d, f.sx), &f);

  for (const auto& f : *findings) {
    std::string key = finding_key(f.s, f.d, f.sx);
    if (injected_keys.count(key)) continue;  // control entries never reach the output
    Verdict v;
    v.fqdn = *input_by_key.at(key);
    v.type = SquattingType::simple(*squat_from_string(f.type));
    v.target = *normalized_registrable(f.l);
    v.source = VerdictSource::Llm;
    if (v.target == registrable(v.fqdn)) {
      log_event("trv", "self_target_dropped", v.fqdn.raw);
      continue;
    }
    out.verdicts.push_back(std::move(v));
  }
  return out;
}

ChunkResult process_chunk(const dnx::Chunk& chunk, llm::ChatBackend& backend,
                          const MustPassSelector& selector, const dnx::ReferenceIndex& index,
                          const TargetChecker& checker, const TrvConfig& config,
                          const std::vector<std::string>* extra_references) {
  std::set<std::string> chunk_raws;
  for (const auto& p : chunk.pairs) chunk_raws.insert(p.input.raw);
  AugmentedChunk aug = inject(chunk, selector.select(chunk.id, chunk_raws));
  if (extra_references != nullptr) {
    for (const auto& r : *extra_references) {
      if (std::find(aug.references.begin(), aug.references.end(), r) == aug.references.end()) {
        aug.references.push_back(r);
      }
    }
  }

  ChunkResult result;
  result.chunk_id = chunk.id;
  std::vector<std::pair<int, std::string>> feedback_history;

  for (int attempt = 1; attempt <= config.max_attempts; ++attempt) {
    result.attempts_used = attempt;
    llm::LlmRequest req = build_prompt(aug, feedback_history);
    llm::LlmResponse resp;
    try {
      resp = backend.chat(req);
    } catch (const llm::TransportError& e) {
      log_event("trv", "transport_error", e.what());
      result.outcome =
          ValidationOutcome{ValidationStatus::TransportError, {}, config.templates.transport, attempt};
      feedback_history.emplace_back(attempt, config.templates.transport);
      continue;
    } catch (const llm::ProtocolError& e) {
      log_event("trv", "protocol_error", e.what());
      result.outcome =
          ValidationOutcome{ValidationStatus::TransportError, {}, config.templates.transport, attempt};
      feedback_history.emplace_back(attempt, config.templates.transport);
      continue;
    }
    result.tokens.input += resp.input_tokens;
    result.tokens.output += resp.output_tokens;

    ValidationOutcome outcome = run_validators(resp.text, aug, index, checker, config.templates);
    outcome.attempt = attempt;
    result.outcome = outcome;
    if (outcome.status == ValidationStatus::Accepted) {
      return result;
    }
    log_event("trv", "validation_failed",
              "chunk=" + std::to_string(chunk.id) + " attempt=" + std::to_string(attempt) +
                  " status=" + std::string(to_string(outcome.status)));
    feedback_history.emplace_back(attempt, outcome.feedback);
  }
  return result;
}

std::vector<ChunkResult> process_chunks(const std::vector<dnx::Chunk>& chunks,
                                        llm::ChatBackend& backend, const MustPassSelector& selector,
                                        const dnx::ReferenceIndex& index, const TargetChecker& checker,
                                        const TrvConfig& config, unsigned inflight) {
  std::vector<ChunkResult> results(chunks.size());
  if (inflight == 0) inflight = 1;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= chunks.size()) return;
      results[i] = process_chunk(chunks[i], backend, selector, index, checker, config);
    }
  };
  if (inflight == 1 || chunks.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (unsigned w = 0; w < std::min<std::size_t>(inflight, chunks.size()); ++w) {
      threads.emplace_back(worker);
    }
    for (auto& t : threads) t.join();
  }
  return results;
}

}  // namespace squatscan::trv
