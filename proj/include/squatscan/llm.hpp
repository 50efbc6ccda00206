#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <string_view>

#include "squatscan/squatgen.hpp"

namespace squatscan::llm {

struct LlmRequest {
  std::string system_text;
  std::string user_text;
  int max_output_tokens = 4096;
  double temperature = 0.0;
};

struct LlmResponse {
  std::string text;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  std::int64_t latency_ms = 0;
};

class AuthError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// chars/4, rounded up; used whenever a provider reports no usage numbers.
std::int64_t estimate_tokens(std::string_view text);

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string id() const = 0;
  virtual LlmResponse chat(const LlmRequest& request) = 0;
};

// Fixed-reply backend for plumbing tests.
class EchoBackend : public ChatBackend {
 public:
  explicit EchoBackend(std::string reply) : reply_(std::move(reply)) {}
  std::string id() const override { return "echo"; }
  LlmResponse chat(const LlmRequest& request) override;

 private:
  std::string reply_;
};

struct HttpBackendConfig {
  std::string endpoint;  // full URL of a chat-completions route
  std::string model;
  std::string credential_env;  // name of the env var holding the API key
  int timeout_ms = 60000;
  int max_attempts = 3;
  int retry_backoff_ms = 250;
  int inflight = 4;
};

// Generic chat-completions client. Model differences are configuration, not
// code: one wire shape covers the provider-style JSON payloads.
class HttpChatBackend : public ChatBackend {
 public:
  explicit HttpChatBackend(HttpBackendConfig config);
  std::string id() const override { return "http:" + config_.model; }
  LlmResponse chat(const LlmRequest& request) override;

 private:
  HttpBackendConfig config_;
};

// Deterministic fault injection for the mock oracle. Behavior depends only
// on (seed, request content); rates apply per response draw.
struct FaultProfile {
  double drop_rate = 0.0;            // omit a true squat finding
  double hallucinate_rate = 0.0;     // emit a domain absent from the input
  double corrupt_format_rate = 0.0;  // wrap the reply in prose
  double fabricate_target_rate = 0.0;  // name a non-existent legitimate domain
  std::uint64_t seed = 0;
  // Faults fire only while the inferred attempt number is <= this bound.
  int attempts_affected = std::numeric_limits<int>::max();
};

// Scripted stand-in for a live model: parses the structured input list from
// the prompt, answers with rule-based detections (hybrid decomposition
// included), then applies the fault profile. Pure given (request, seed).
class OracleBackend : public ChatBackend {
 public:
  OracleBackend(const squatgen::BaselineDetector& detector, FaultProfile faults);
  std::string id() const override { return "oracle"; }
  LlmResponse chat(const LlmRequest& request) override;

 private:
  const squatgen::BaselineDetector* detector_;
  FaultProfile faults_;
};

}  // namespace squatscan::llm
