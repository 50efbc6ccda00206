#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>

#include "squatscan/trv.hpp"

using namespace squatscan;
using namespace squatscan::trv;

namespace {

const std::string kData = SQUATSCAN_DATA_DIR;
const std::string kFixtures = SQUATSCAN_FIXTURE_DIR;

const SuffixRuleSet& psl() {
  static SuffixRuleSet p = SuffixRuleSet::from_file(kData + "/public_suffix_snapshot.dat");
  return p;
}

const squatgen::BrandSet& brands() {
  static squatgen::BrandSet b = squatgen::BrandSet::from_tranco_csv(kFixtures + "/brands_50.csv", psl());
  return b;
}

const squatgen::BaselineDetector& detector() {
  static squatgen::GeneratorTables tables = squatgen::GeneratorTables::load(kData);
  static squatgen::BaselineDetector d(brands(), tables, psl());
  return d;
}

const MustPassSelector& selector() {
  static MustPassSelector s(detector());
  return s;
}

const dnx::ReferenceIndex& index50() {
  static dnx::LocalNgramEmbedder emb;
  static dnx::ReferenceIndex idx = [] {
    std::vector<std::pair<std::uint32_t, std::string>> ranked;
    for (const auto& b : brands().brands()) ranked.emplace_back(b.rank, b.domain);
    return dnx::ReferenceIndex::build(ranked, dnx::LocalNgramEmbedder{}, psl());
  }();
  return idx;
}

const OfflineChecker& checker() {
  static OfflineChecker c(index50(), {"allowlisted.example"});
  return c;
}

Fqdn mk(const std::string& raw) { return parse_fqdn(normalize(raw), psl()); }

dnx::Chunk make_chunk(std::size_t id, const std::vector<std::string>& raws) {
  dnx::Chunk c;
  c.id = id;
  for (const auto& raw : raws) {
    c.pairs.push_back({mk(raw), "google.com", 0.5});
  }
  return c;
}

dnx::Chunk numbered_chunk(std::size_t id, std::size_t n) {
  std::vector<std::string> raws;
  for (std::size_t i = 0; i < n; ++i) {
    raws.push_back("input-" + std::to_string(1000 + i) + ".example");
  }
  return make_chunk(id, raws);
}

Finding finding_for(const Fqdn& f, const std::string& type, const std::string& target) {
  return Finding{f.s, f.d, f.sx, type, target};
}

}  // namespace

TEST_CASE("must-pass selection is deterministic and rotates") {
  auto a = selector().select(7);
  auto b = selector().select(7);
  for (int i = 0; i < 4; ++i) {
    CHECK(a[i].fqdn.raw == b[i].fqdn.raw);
    CHECK(a[i].provenance == b[i].provenance);
  }
  auto c = selector().select(8);
  bool differs = false;
  for (int i = 0; i < 4; ++i) differs = differs || a[i].fqdn.raw != c[i].fqdn.raw;
  CHECK(differs);

  CHECK(!a[0].is_squat());
  CHECK(!a[1].is_squat());
  CHECK(a[2].is_squat());
  CHECK(a[3].is_squat());
  std::set<std::string> brands_used;
  for (const auto& e : a) brands_used.insert(e.provenance);
  CHECK(brands_used.size() == 4);

  // squat entries are unambiguous permutations of their provenance brand
  for (int i = 2; i < 4; ++i) {
    auto v = detector().detect(a[i].fqdn);
    REQUIRE(v.has_value());
    CHECK(v->target == a[i].provenance);
    CHECK(*a[i].squat_target == a[i].provenance);
  }
}

TEST_CASE("must-pass selection skips entries colliding with chunk inputs") {
  auto plain = selector().select(0);
  std::set<std::string> exclude = {plain[2].fqdn.raw};
  auto adjusted = selector().select(0, exclude);
  for (const auto& e : adjusted) CHECK(e.fqdn.raw != *exclude.begin());
}

TEST_CASE("amazon-style permutation example") {
  // the selector builds "amzaon.com"-style entries: a single adjacent swap
  MustPassSelector s(detector(), 4);
  bool saw_amazon = false;
  for (std::size_t chunk = 0; chunk < 4; ++chunk) {
    for (const auto& e : s.select(chunk)) {
      if (e.is_squat() && e.provenance == "amazon.com") {
        saw_amazon = true;
        CHECK(*e.squat_target == "amazon.com");
        CHECK(e.fqdn.d != "amazon");
        CHECK(e.fqdn.d.size() == 6);
      }
    }
  }
  CHECK(saw_amazon);
}

TEST_CASE("inject places full-chunk entries at 26, 51, 76, 101") {
  auto chunk = numbered_chunk(3, 100);
  auto aug = inject(chunk, selector().select(3));
  CHECK(aug.entries.size() == 104);
  REQUIRE(aug.injected.size() == 4);
  CHECK(aug.injected[0].first == 26);
  CHECK(aug.injected[1].first == 51);
  CHECK(aug.injected[2].first == 76);
  CHECK(aug.injected[3].first == 101);
  for (const auto& [pos, e] : aug.injected) {
    CHECK(aug.entries[pos - 1].raw == e.fqdn.raw);
  }
}

TEST_CASE("inject generalizes to partial chunks") {
  auto aug4 = inject(numbered_chunk(0, 4), selector().select(0));
  CHECK(aug4.entries.size() == 8);
  std::vector<std::size_t> got;
  for (const auto& [pos, e] : aug4.injected) got.push_back(pos);
  CHECK(got == std::vector<std::size_t>{2, 4, 6, 8});

  auto aug69 = inject(numbered_chunk(1, 69), selector().select(1));
  CHECK(aug69.entries.size() == 73);
  std::vector<std::size_t> got69;
  for (const auto& [pos, e] : aug69.injected) got69.push_back(pos);
  CHECK(got69 == std::vector<std::size_t>{19, 38, 57, 73});
}

TEST_CASE("strip after inject restores the original pair list exactly") {
  for (std::size_t n : {1ul, 4ul, 37ul, 100ul}) {
    auto chunk = numbered_chunk(n, n);
    auto aug = inject(chunk, selector().select(n));
    auto restored = strip(aug);
    REQUIRE(restored.size() == chunk.pairs.size());
    for (std::size_t i = 0; i < restored.size(); ++i) {
      CHECK(restored[i] == chunk.pairs[i].input.raw);
    }
  }
}

TEST_CASE("prompt contains the five sections and eight criteria") {
  auto chunk = make_chunk(0, {"aaa.example", "bbb.example"});
  auto aug = inject(chunk, selector().select(0));
  auto req = build_prompt(aug, {});
  const std::string& p = req.user_text;

  for (const char* section : {"# Task Description", "# Analysis Criteria", "# Output Specification",
                              "# Additional Legitimate Domains", "# Input Domains"}) {
    CHECK(p.find(section) != std::string::npos);
  }
  CHECK(p.find("# Reviewer Feedback") == std::string::npos);

  int criteria = 0;
  for (int i = 1; i <= 9; ++i) {
    if (p.find("\n" + std::to_string(i) + ". ") != std::string::npos) ++criteria;
  }
  CHECK(criteria == 8);

  // both pairs share the proximate domain; the reference appears exactly once
  auto first = p.find("- google.com");
  REQUIRE(first != std::string::npos);
  CHECK(p.find("- google.com", first + 1) == std::string::npos);

  // byte stability
  auto req2 = build_prompt(aug, {});
  CHECK(req.user_text == req2.user_text);
  CHECK(req.system_text == req2.system_text);

  auto with_feedback = build_prompt(aug, {{1, "look harder"}});
  CHECK(with_feedback.user_text.find("# Reviewer Feedback") != std::string::npos);
  CHECK(with_feedback.user_text.find("- attempt 1: look harder") != std::string::npos);
  // feedback precedes the input list so the input section stays last
  CHECK(with_feedback.user_text.find("# Reviewer Feedback") <
        with_feedback.user_text.find("# Input Domains"));
}

TEST_CASE("validate_format accepts arrays and rejects everything else") {
  auto ok = validate_format(R"([{"s":"login","d":"amaz0n","sx":"com","type":"typo","l":"amazon.com"}])");
  REQUIRE(ok.has_value());
  REQUIRE(ok->size() == 1);
  CHECK((*ok)[0].d == "amaz0n");

  CHECK(validate_format("[]")->empty());
  CHECK(validate_format("```json\n[]\n```").has_value());
  CHECK(validate_format("  [] \n").has_value());

  CHECK(!validate_format("Here are the results: []").has_value());
  CHECK(!validate_format(R"({"s":"a"})").has_value());
  CHECK(!validate_format(R"([{"s":"a","d":"b","sx":"c","type":"typo"}])").has_value());  // missing l
  CHECK(!validate_format(
           R"([{"s":"a","d":"b","sx":"c","type":"typo","l":"x.com","extra":1}])")
           .has_value());
  CHECK(!validate_format(R"([{"s":"a","d":"b","sx":"c","type":"bogus","l":"x.com"}])").has_value());
  CHECK(!validate_format(R"([{"s":"a","d":"b","sx":"c","type":"typo","l":3}])").has_value());
  CHECK(!validate_format("[] trailing").has_value());
}

TEST_CASE("check_consistency rejects foreign domains and collapses duplicates") {
  auto chunk = make_chunk(0, {"amzaon.com", "other.example"});
  auto aug = inject(chunk, selector().select(0));

  std::vector<Finding> good = {finding_for(mk("amzaon.com"), "typo", "amazon.com"),
                               finding_for(mk("amzaon.com"), "typo", "amazon.com")};
  CHECK(check_consistency(good, aug));
  CHECK(good.size() == 1);  // duplicates collapsed

  std::vector<Finding> bad = {finding_for(mk("evil.example"), "combo", "amazon.com")};
  CHECK(!check_consistency(bad, aug));
}

TEST_CASE("verify_must_pass catches false negatives and false positives") {
  auto chunk = make_chunk(0, {"other.example"});
  auto aug = inject(chunk, selector().select(0));

  std::vector<Finding> complete;
  for (const auto& [pos, e] : aug.injected) {
    if (e.is_squat()) complete.push_back(finding_for(e.fqdn, "typo", *e.squat_target));
  }
  CHECK(verify_must_pass(complete, aug));

  // any squat type is accepted as long as the target matches
  std::vector<Finding> retyped = complete;
  retyped[0].type = "bit";
  CHECK(verify_must_pass(retyped, aug));

  std::vector<Finding> missing = {complete[0]};
  CHECK(!verify_must_pass(missing, aug));

  std::vector<Finding> wrong_target = complete;
  wrong_target[0].l = "google.com";
  if (wrong_target[0].l == complete[0].l) wrong_target[0].l = "youtube.com";
  CHECK(!verify_must_pass(wrong_target, aug));

  std::vector<Finding> benign_reported = complete;
  for (const auto& [pos, e] : aug.injected) {
    if (!e.is_squat()) {
      benign_reported.push_back(finding_for(e.fqdn, "combo", "google.com"));
      break;
    }
  }
  CHECK(!verify_must_pass(benign_reported, aug));
}

TEST_CASE("verify_targets resolves via index then allowlist") {
  std::vector<Finding> in_index = {finding_for(mk("x.example"), "combo", "amazon.com")};
  CHECK(verify_targets(in_index, index50(), checker()));

  std::vector<Finding> allowlisted = {finding_for(mk("x.example"), "combo", "allowlisted.example")};
  CHECK(verify_targets(allowlisted, index50(), checker()));

  std::vector<Finding> unknown = {finding_for(mk("x.example"), "combo", "zzqx-nonexistent.example")};
  CHECK(!verify_targets(unknown, index50(), checker()));
}

TEST_CASE("validator order: format failures mask later checks") {
  auto chunk = make_chunk(0, {"amzaon.com"});
  auto aug = inject(chunk, selector().select(0));
  // response is simultaneously non-JSON and would be inconsistent
  auto outcome = run_validators("prose [\"also bad\"]", aug, index50(), checker(),
                                FeedbackTemplates::defaults());
  CHECK(outcome.status == ValidationStatus::FormatError);
  CHECK(outcome.feedback == FeedbackTemplates::defaults().f1);

  // consistent findings with a bad target stop at target existence
  std::string resp;
  {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& [pos, e] : aug.injected) {
      if (e.is_squat()) {
        arr.push_back({{"s", e.fqdn.s}, {"d", e.fqdn.d}, {"sx", e.fqdn.sx}, {"type", "typo"},
                       {"l", *e.squat_target}});
      }
    }
    arr.push_back({{"s", ""}, {"d", "amzaon"}, {"sx", "com"}, {"type", "typo"},
                   {"l", "zzqx-nonexistent.example"}});
    resp = arr.dump();
  }
  auto out2 = run_validators(resp, aug, index50(), checker(), FeedbackTemplates::defaults());
  CHECK(out2.status == ValidationStatus::TargetExistenceError);
  CHECK(out2.feedback == FeedbackTemplates::defaults().f4);
}

TEST_CASE("feedback template file matches the embedded defaults") {
  auto from_file = FeedbackTemplates::from_file(kData + "/feedback_templates.conf");
  auto defaults = FeedbackTemplates::defaults();
  CHECK(from_file.f1 == defaults.f1);
  CHECK(from_file.f2 == defaults.f2);
  CHECK(from_file.f3 == defaults.f3);
  CHECK(from_file.f4 == defaults.f4);
  CHECK(from_file.transport == defaults.transport);
}

TEST_CASE("process_chunk accepts a zero-fault oracle on the first attempt") {
  llm::OracleBackend oracle(detector(), {});
  auto chunk = make_chunk(0, {"amzaon.com", "www.google.com", "arnazon-secure.com",
                              "zzqxkwv.example", "google.org"});
  TrvConfig cfg;
  auto result = process_chunk(chunk, oracle, selector(), index50(), checker(), cfg);
  CHECK(result.accepted());
  CHECK(result.attempts_used == 1);
  CHECK(result.tokens.input > 0);
  CHECK(result.tokens.output > 0);

  // verdicts equal the rule-based detections over the chunk, controls stripped
  std::map<std::string, std::string> got;
  for (const auto& v : result.outcome.verdicts) got[v.fqdn.raw] = v.target;
  std::map<std::string, std::string> want;
  for (const auto& p : chunk.pairs) {
    if (auto v = detector().detect_with_hybrid(p.input)) want[p.input.raw] = v->target;
  }
  CHECK(got == want);
  for (const auto& v : result.outcome.verdicts) {
    CHECK(v.source == VerdictSource::Llm);
  }
}

TEST_CASE("hallucination on attempt one is filtered by the re-run loop") {
  llm::FaultProfile faults;
  faults.hallucinate_rate = 1.0;
  faults.attempts_affected = 1;
  faults.seed = 5;
  llm::OracleBackend oracle(detector(), faults);
  auto chunk = make_chunk(2, {"amzaon.com", "www.google.com"});
  TrvConfig cfg;
  auto result = process_chunk(chunk, oracle, selector(), index50(), checker(), cfg);
  CHECK(result.accepted());
  CHECK(result.attempts_used == 2);
  for (const auto& v : result.outcome.verdicts) {
    CHECK(v.fqdn.raw == "amzaon.com");
  }
}

TEST_CASE("permanent format corruption exhausts all attempts") {
  llm::FaultProfile faults;
  faults.corrupt_format_rate = 1.0;
  llm::OracleBackend oracle(detector(), faults);
  auto chunk = make_chunk(1, {"amzaon.com"});
  TrvConfig cfg;
  auto result = process_chunk(chunk, oracle, selector(), index50(), checker(), cfg);
  CHECK(!result.accepted());
  CHECK(result.attempts_used == 3);
  CHECK(result.outcome.status == ValidationStatus::FormatError);
  CHECK(result.outcome.verdicts.empty());
}

namespace {
class FlakyBackend : public llm::ChatBackend {
 public:
  FlakyBackend(llm::ChatBackend& inner, int failures) : inner_(&inner), failures_(failures) {}
  std::string id() const override { return "flaky"; }
  llm::LlmResponse chat(const llm::LlmRequest& req) override {
    if (calls_++ < failures_) throw llm::TransportError("connection reset");
    return inner_->chat(req);
  }

 private:
  llm::ChatBackend* inner_;
  int failures_ = 0;
  int calls_ = 0;
};
}  // namespace

TEST_CASE("transport failures burn attempts with the transport feedback") {
  llm::OracleBackend oracle(detector(), {});
  FlakyBackend flaky(oracle, 1);
  auto chunk = make_chunk(4, {"amzaon.com"});
  TrvConfig cfg;
  auto result = process_chunk(chunk, flaky, selector(), index50(), checker(), cfg);
  CHECK(result.accepted());
  CHECK(result.attempts_used == 2);

  FlakyBackend dead(oracle, 99);
  auto failed = process_chunk(chunk, dead, selector(), index50(), checker(), cfg);
  CHECK(!failed.accepted());
  CHECK(failed.outcome.status == ValidationStatus::TransportError);
  CHECK(failed.outcome.feedback == "transport");
  CHECK(failed.attempts_used == 3);
}

TEST_CASE("process_chunks preserves chunk order under concurrency") {
  llm::OracleBackend oracle(detector(), {});
  std::vector<dnx::Chunk> chunks;
  for (std::size_t i = 0; i < 6; ++i) {
    chunks.push_back(make_chunk(i, {"amzaon.com", "padding-" + std::to_string(i) + ".example"}));
  }
  TrvConfig cfg;
  auto serial = process_chunks(chunks, oracle, selector(), index50(), checker(), cfg, 1);
  auto parallel = process_chunks(chunks, oracle, selector(), index50(), checker(), cfg, 4);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].chunk_id == i);
    CHECK(parallel[i].chunk_id == i);
    CHECK(serial[i].accepted() == parallel[i].accepted());
    CHECK(serial[i].outcome.verdicts.size() == parallel[i].outcome.verdicts.size());
  }
}

TEST_CASE("accepted chunks satisfy the acceptance invariants under any faults") {
  // detectable fault classes only; silent drops of ordinary findings are
  // invisible by design (that is what the must-pass sampling is for)
  std::vector<llm::FaultProfile> profiles;
  {
    llm::FaultProfile f;
    f.hallucinate_rate = 0.7;
    f.attempts_affected = 1;
    f.seed = 21;
    profiles.push_back(f);
  }
  {
    llm::FaultProfile f;
    f.fabricate_target_rate = 0.6;
    f.attempts_affected = 1;
    f.seed = 22;
    profiles.push_back(f);
  }
  {
    llm::FaultProfile f;
    f.corrupt_format_rate = 0.5;
    f.attempts_affected = 2;
    f.seed = 23;
    profiles.push_back(f);
  }

  llm::OracleBackend clean(detector(), {});
  TrvConfig cfg;
  for (const auto& faults : profiles) {
    llm::OracleBackend faulty(detector(), faults);
    for (std::size_t id = 0; id < 8; ++id) {
      auto chunk = make_chunk(id, {"amzaon.com", "gooogle.com", "www.youtube.com",
                                   "n" + std::to_string(id) + ".example"});
      auto result = process_chunk(chunk, faulty, selector(), index50(), checker(), cfg);
      if (!result.accepted()) continue;
      std::set<std::string> chunk_inputs;
      for (const auto& p : chunk.pairs) chunk_inputs.insert(p.input.raw);
      auto baseline = process_chunk(chunk, clean, selector(), index50(), checker(), cfg);
      REQUIRE(baseline.accepted());
      std::set<std::string> want, got;
      for (const auto& v : baseline.outcome.verdicts) want.insert(v.fqdn.raw + ">" + v.target);
      for (const auto& v : result.outcome.verdicts) got.insert(v.fqdn.raw + ">" + v.target);
      CHECK(got == want);
      for (const auto& v : result.outcome.verdicts) {
        CHECK(chunk_inputs.count(v.fqdn.raw) == 1);
        CHECK((index50().contains_domain(v.target) || checker().exists(v.target)));
      }
    }
  }
}
