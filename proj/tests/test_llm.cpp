#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include "squatscan/llm.hpp"
#include "squatscan/trv.hpp"

using namespace squatscan;
using namespace squatscan::llm;

namespace {

const std::string kData = SQUATSCAN_DATA_DIR;
const std::string kFixtures = SQUATSCAN_FIXTURE_DIR;

const SuffixRuleSet& psl() {
  static SuffixRuleSet p = SuffixRuleSet::from_file(kData + "/public_suffix_snapshot.dat");
  return p;
}

const squatgen::BaselineDetector& detector() {
  static squatgen::BrandSet brands =
      squatgen::BrandSet::from_tranco_csv(kFixtures + "/brands_50.csv", psl());
  static squatgen::GeneratorTables tables = squatgen::GeneratorTables::load(kData);
  static squatgen::BaselineDetector d(brands, tables, psl());
  return d;
}

LlmRequest oracle_request(const std::vector<std::string>& raws) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& raw : raws) arr.push_back(to_structured(parse_fqdn(normalize(raw), psl())));
  LlmRequest req;
  req.system_text = "You are a security analyst specialized in identifying domain squatting.";
  req.user_text = "# Task Description\n...\n\n# Input Domains\n" + arr.dump() + "\n";
  return req;
}

}  // namespace

TEST_CASE("echo backend returns the fixed reply with token estimates") {
  EchoBackend echo("hello world");
  LlmRequest req{"system", "user text", 128, 0.0};
  auto resp = echo.chat(req);
  CHECK(resp.text == "hello world");
  CHECK(resp.latency_ms >= 0);
  CHECK(resp.input_tokens == estimate_tokens("system") + estimate_tokens("user text"));
  CHECK(resp.output_tokens == estimate_tokens("hello world"));
}

TEST_CASE("token estimate is monotone in text length") {
  CHECK(estimate_tokens("") == 0);
  std::string s;
  std::int64_t last = 0;
  for (int i = 0; i < 64; ++i) {
    s.push_back('x');
    auto est = estimate_tokens(s);
    CHECK(est >= last);
    last = est;
  }
  CHECK(estimate_tokens("abcd") == 1);
  CHECK(estimate_tokens("abcde") == 2);
}

TEST_CASE("http backend retries transient failures then succeeds") {
  std::atomic<int> calls{0};
  httplib::Server server;
  server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    int n = ++calls;
    if (n <= 2) {
      res.status = 500;
      res.set_content("overloaded", "text/plain");
      return;
    }
    res.set_content(
        R"({"choices":[{"message":{"content":"[]"}}],"usage":{"prompt_tokens":42,"completion_tokens":2}})",
        "application/json");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpBackendConfig cfg;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  cfg.model = "test-model";
  cfg.retry_backoff_ms = 1;
  HttpChatBackend backend(cfg);
  auto resp = backend.chat({"sys", "user", 64, 0.0});
  CHECK(resp.text == "[]");
  CHECK(resp.input_tokens == 42);
  CHECK(resp.output_tokens == 2);
  CHECK(calls == 3);

  server.stop();
  t.join();
}

TEST_CASE("http backend fails with TransportError after exhausting retries") {
  HttpBackendConfig cfg;
  cfg.endpoint = "http://127.0.0.1:9/v1/chat/completions";  // discard port, nothing listens
  cfg.model = "test-model";
  cfg.retry_backoff_ms = 1;
  cfg.timeout_ms = 200;
  HttpChatBackend backend(cfg);
  CHECK_THROWS_AS(backend.chat({"sys", "user", 64, 0.0}), TransportError);
}

TEST_CASE("missing credential raises AuthError before any network call") {
  unsetenv("SQUATSCAN_TEST_MISSING_KEY");
  HttpBackendConfig cfg;
  cfg.endpoint = "http://127.0.0.1:9/v1/chat/completions";
  cfg.model = "test-model";
  cfg.credential_env = "SQUATSCAN_TEST_MISSING_KEY";
  HttpChatBackend backend(cfg);
  CHECK_THROWS_AS(backend.chat({"sys", "user", 64, 0.0}), AuthError);
}

TEST_CASE("zero fault oracle equals the rule-based detector") {
  std::vector<std::string> inputs = {"login.amaz0n.com", "www.google.com", "amzaon.com",
                                     "arnazon-secure.com", "zzqxkwv.example", "google.org"};
  OracleBackend oracle(detector(), {});
  auto resp = oracle.chat(oracle_request(inputs));

  auto j = nlohmann::json::parse(resp.text);
  REQUIRE(j.is_array());
  std::map<std::string, std::pair<std::string, std::string>> got;  // d -> (type, l)
  for (const auto& f : j) {
    got[f.at("d").get<std::string>()] = {f.at("type").get<std::string>(), f.at("l").get<std::string>()};
  }

  std::map<std::string, std::pair<std::string, std::string>> want;
  for (const auto& raw : inputs) {
    Fqdn f = parse_fqdn(normalize(raw), psl());
    if (auto v = detector().detect_with_hybrid(f)) {
      want[f.d] = {std::string(to_string(v->type.kind)), v->target};
    }
  }
  CHECK(got == want);
  CHECK(got.count("amaz0n") == 1);
  CHECK(got.at("amaz0n").second == "amazon.com");
  CHECK(got.count("google") == 1);  // tld squat google.org
  CHECK(got.count("zzqxkwv") == 0);
  CHECK(got.count("arnazon-secure") == 1);
  CHECK(got.at("arnazon-secure").first == "hybrid");
}

TEST_CASE("all benign input yields an empty findings array") {
  OracleBackend oracle(detector(), {});
  auto resp = oracle.chat(oracle_request({"www.google.com", "mail.amazon.com"}));
  CHECK(nlohmann::json::parse(resp.text) == nlohmann::json::array());
}

TEST_CASE("fault injection is reproducible and seed dependent") {
  FaultProfile faults;
  faults.hallucinate_rate = 0.5;
  faults.corrupt_format_rate = 0.3;
  faults.seed = 11;
  OracleBackend a(detector(), faults);
  OracleBackend b(detector(), faults);
  auto req = oracle_request({"amzaon.com", "www.google.com"});
  CHECK(a.chat(req).text == b.chat(req).text);

  faults.seed = 12;
  OracleBackend c(detector(), faults);
  // different seed may change the output; across many requests it must
  bool any_diff = false;
  for (int i = 0; i < 20 && !any_diff; ++i) {
    auto r = oracle_request({"amzaon.com", "name" + std::to_string(i) + ".com"});
    any_diff = a.chat(r).text != c.chat(r).text;
  }
  CHECK(any_diff);
}

TEST_CASE("hallucinate_rate 1 emits a domain absent from the input") {
  FaultProfile faults;
  faults.hallucinate_rate = 1.0;
  faults.seed = 3;
  OracleBackend oracle(detector(), faults);
  auto resp = oracle.chat(oracle_request({"www.google.com"}));
  auto j = nlohmann::json::parse(resp.text);
  REQUIRE(j.is_array());
  bool found_foreign = false;
  for (const auto& f : j) {
    if (f.at("d").get<std::string>().starts_with("zz-hallucinated")) found_foreign = true;
  }
  CHECK(found_foreign);
}

TEST_CASE("unparseable requests get a corrupt-format reply") {
  OracleBackend oracle(detector(), {});
  LlmRequest req{"sys", "no input section here", 64, 0.0};
  auto resp = oracle.chat(req);
  CHECK(!squatscan::trv::validate_format(resp.text).has_value());
}
