#include <httplib.h>

#include "squatscan/llm.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <json.hpp>

#include "squatscan/util.hpp"

namespace squatscan::llm {

std::int64_t estimate_tokens(std::string_view text) {
  return static_cast<std::int64_t>((text.size() + 3) / 4);
}

LlmResponse EchoBackend::chat(const LlmRequest& request) {
  LlmResponse r;
  r.text = reply_;
  r.input_tokens = estimate_tokens(request.system_text) + estimate_tokens(request.user_text);
  r.output_tokens = estimate_tokens(r.text);
  r.latency_ms = 0;
  return r;
}

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ParseError("endpoint must be a full URL: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpChatBackend::HttpChatBackend(HttpBackendConfig config) : config_(std::move(config)) {}

LlmResponse HttpChatBackend::chat(const LlmRequest& request) {
  std::string credential;
  if (!config_.credential_env.empty()) {
    const char* cred = std::getenv(config_.credential_env.c_str());
    if (cred == nullptr || *cred == '\0') {
      throw AuthError("credential environment variable not set: " + config_.credential_env);
    }
    credential = cred;
  }

  auto [origin, path] = split_url(config_.endpoint);
  httplib::Client client(origin);
  client.set_connection_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);
  client.set_read_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);

  nlohmann::ordered_json body{
      {"model", config_.model},
      {"messages",
       {{{"role", "system"}, {"content", request.system_text}},
        {{"role", "user"}, {"content", request.user_text}}}},
      {"temperature", request.temperature},
      {"max_tokens", request.max_output_tokens},
  };
  std::string payload = body.dump();

  httplib::Headers headers;
  if (!credential.empty()) headers.emplace("Authorization", "Bearer " + credential);

  auto started = std::chrono::steady_clock::now();
  std::string last_error;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(config_.retry_backoff_ms * (1 << (attempt - 2))));
    }
    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      log_event("llm", "retryable_transport_error", last_error);
      continue;
    }
    if (res->status == 401 || res->status == 403) {
      throw AuthError("backend rejected credentials (HTTP " + std::to_string(res->status) + ")");
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      log_event("llm", "retryable_http_error", last_error);
      continue;
    }
    if (res->status != 200) {
      throw ProtocolError("unexpected HTTP status " + std::to_string(res->status));
    }
    auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.contains("choices") || !j["choices"].is_array() ||
        j["choices"].empty() || !j["choices"][0].contains("message") ||
        !j["choices"][0]["message"].contains("content") ||
        !j["choices"][0]["message"]["content"].is_string()) {
      throw ProtocolError("malformed chat completion reply");
    }
    LlmResponse out;
    out.text = j["choices"][0]["message"]["content"].get<std::string>();
    if (j.contains("usage") && j["usage"].is_object()) {
      out.input_tokens = j["usage"].value("prompt_tokens", std::int64_t{0});
      out.output_tokens = j["usage"].value("completion_tokens", std::int64_t{0});
    }
    if (out.input_tokens == 0) {
      out.input_tokens = estimate_tokens(request.system_text) + estimate_tokens(request.user_text);
    }
    if (out.output_tokens == 0) out.output_tokens = estimate_tokens(out.text);
    out.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::steady_clock::now() - started)
                         .count();
    return out;
  }
  throw TransportError("backend unreachable after " + std::to_string(config_.max_attempts) +
                       " attempts: " + last_error);
}

OracleBackend::OracleBackend(const squatgen::BaselineDetector& detector, FaultProfile faults)
    : detector_(&detector), faults_(faults) {}

LlmResponse OracleBackend::chat(const LlmRequest& request) {
  const std::string& text = request.user_text;

  LlmResponse out;
  out.input_tokens = estimate_tokens(request.system_text) + estimate_tokens(request.user_text);
  out.latency_ms = 0;

  auto reply = [&](std::string body) {
    out.text = std::move(body);
    out.output_tokens = estimate_tokens(out.text);
    return out;
  };

  // The input list is the JSON array that follows the final prompt section.
  auto header = text.rfind("# Input Domains");
  std::size_t array_start = header == std::string::npos ? std::string::npos : text.find('[', header);
  if (array_start == std::string::npos) {
    return reply("I could not find any input domains in this request.");
  }
  auto parsed = nlohmann::json::parse(text.substr(array_start), nullptr, false);
  if (parsed.is_discarded() || !parsed.is_array()) {
    return reply("I could not parse the input domain list in this request.");
  }

  // Attempt number is recoverable from the accumulated reviewer feedback, so
  // the response stays a pure function of the request text.
  int attempt = 1;
  for (std::size_t pos = 0; (pos = text.find("\n- attempt ", pos)) != std::string::npos; ++pos) {
    ++attempt;
  }
  bool faults_active = attempt <= faults_.attempts_affected;
  Rng rng(faults_.seed ^ fnv1a64(text));

  nlohmann::ordered_json findings = nlohmann::ordered_json::array();
  for (const auto& item : parsed) {
    if (!item.is_object() || !item.contains("d") || !item.contains("sx")) continue;
    Fqdn f;
    f.s = item.value("s", "");
    f.d = item.value("d", "");
    f.sx = item.value("sx", "");
    f.raw = f.s.empty() ? f.d + "." + f.sx : f.s + "." + f.d + "." + f.sx;
    auto verdict = detector_->detect_with_hybrid(f);
    if (!verdict) continue;
    if (faults_active && rng.next_double() < faults_.drop_rate) continue;
    std::string target = verdict->target;
    if (faults_active && rng.next_double() < faults_.fabricate_target_rate) {
      target = "zzqx-nonexistent.example";
    }
    findings.push_back(nlohmann::ordered_json{{"s", f.s},
                                              {"d", f.d},
                                              {"sx", f.sx},
                                              {"type", std::string(to_string(verdict->type.kind))},
                                              {"l", target}});
  }

  if (faults_active && rng.next_double() < faults_.hallucinate_rate) {
    findings.push_back(nlohmann::ordered_json{{"s", ""},
                                              {"d", "zz-hallucinated-" + std::to_string(rng.below(1000))},
                                              {"sx", "invalid"},
                                              {"type", "combo"},
                                              {"l", detector_->brands().brands().front().domain}});
  }

  std::string body = findings.dump();
  if (faults_active && rng.next_double() < faults_.corrupt_format_rate) {
    body = "Here is my analysis of the provided domains:\n" + body +
           "\nLet me know if you need more detail.";
  }
  return reply(body);
}

}  // namespace squatscan::llm
