#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <filesystem>
#include <optional>
#include <unordered_set>
#include <string>
#include <vector>

#include "squatscan/dnx.hpp"
#include "squatscan/llm.hpp"
#include "squatscan/squatgen.hpp"

namespace squatscan::trv {

// Injected control entry: either a brand verbatim (expected benign) or a
// single unambiguous character permutation of it (expected squat).
struct MustPassEntry {
  Fqdn fqdn;
  std::optional<std::string> squat_target;  // empty -> expected benign
  std::string provenance;                   // brand the entry derives from
  bool is_squat() const { return squat_target.has_value(); }
};

// Deterministic rotation over the best-ranked brands. Squat entries are
// pre-screened so the rule-based detector resolves them to their own brand;
// brands with no unambiguous permutation are excluded from the pool.
class MustPassSelector {
 public:
  explicit MustPassSelector(const squatgen::BaselineDetector& detector, std::size_t pool_limit = 100);

  // Two benign + two squat entries; the four brands are distinct and squat
  // targets never collide with the benign entries of the same set. Brands
  // whose control names already appear among `exclude_raws` (the chunk's own
  // inputs) are skipped so stripping controls never swallows a real verdict.
  std::array<MustPassEntry, 4> select(std::size_t chunk_id,
                                      const std::set<std::string>& exclude_raws = {}) const;

  std::size_t pool_size() const { return pool_.size(); }

 private:
  struct PoolEntry {
    Fqdn benign;
    Fqdn squat;
    std::string domain;
  };
  std::vector<PoolEntry> pool_;
};

// A chunk with must-pass entries spliced in. Positions are 1-indexed into
// the augmented list and strictly increasing.
struct AugmentedChunk {
  std::size_t chunk_id = 0;
  std::vector<dnx::DomainPair> original;
  std::vector<Fqdn> entries;  // original pairs plus injected must-pass names
  std::vector<std::pair<std::size_t, MustPassEntry>> injected;
  std::vector<std::string> references;  // deduplicated proximate domains
};

// For a full 100-pair chunk the entries land at augmented positions
// 26, 51, 76 and 101; smaller chunks insert after each ceil(n/4)-sized block.
AugmentedChunk inject(const dnx::Chunk& chunk, const std::array<MustPassEntry, 4>& entries);

// Removes the injected positions; the result equals the original pair names.
std::vector<std::string> strip(const AugmentedChunk& aug);

// One row of parsed model output.
struct Finding {
  std::string s, d, sx, type, l;
};

enum class ValidationStatus {
  Accepted,
  FormatError,
  ConsistencyError,
  MustPassError,
  TargetExistenceError,
  TransportError,  // backend attempt failed outright
};

std::string_view to_string(ValidationStatus s);

struct ValidationOutcome {
  ValidationStatus status = ValidationStatus::FormatError;
  std::vector<Verdict> verdicts;  // filled only when Accepted
  std::string feedback;           // empty only when Accepted
  int attempt = 1;
};

// Fixed feedback texts for the four validation steps plus transport
// failures. Shipped as a data file so operators can tune them.
struct FeedbackTemplates {
  std::string f1, f2, f3, f4, transport;
  static FeedbackTemplates defaults();
  static FeedbackTemplates from_file(const std::filesystem::path& path);
};

// Pluggable existence check for targeted legitimate domains that are not in
// the reference index.
class TargetChecker {
 public:
  virtual ~TargetChecker() = default;
  virtual bool exists(const std::string& registrable_domain) const = 0;
};

// Offline default: the reference index plus a local allowlist.
class OfflineChecker : public TargetChecker {
 public:
  OfflineChecker(const dnx::ReferenceIndex& index, std::vector<std::string> allowlist);
  bool exists(const std::string& registrable_domain) const override;

 private:
  const dnx::ReferenceIndex* index_;
  std::unordered_set<std::string> allowlist_;
};

// Builds the five-section prompt; identical inputs yield identical bytes.
// Accumulated feedback from failed attempts lands in a reviewer section
// placed just before the input list.
llm::LlmRequest build_prompt(const AugmentedChunk& aug,
                             const std::vector<std::pair<int, std::string>>& feedback_history);

// Step 1: one JSON array (code fences tolerated) of objects with exactly the
// keys s, d, sx, type, l and a known type. nullopt on violation.
std::optional<std::vector<Finding>> validate_format(const std::string& response_text);

// Step 2: every finding names an input entry; duplicates collapse in place.
bool check_consistency(std::vector<Finding>& findings, const AugmentedChunk& aug);

// Step 3: squat entries are reported with the right target, benign entries
// are not reported at all. Any squat type is accepted.
bool verify_must_pass(const std::vector<Finding>& findings, const AugmentedChunk& aug);

// Step 4: every targeted domain resolves via the index or the checker.
bool verify_targets(const std::vector<Finding>& findings, const dnx::ReferenceIndex& index,
                    const TargetChecker& checker);

// Runs the four validators in order and converts surviving findings into
// verdicts (must-pass rows stripped, source = Llm).
ValidationOutcome run_validators(const std::string& response_text, const AugmentedChunk& aug,
                                 const dnx::ReferenceIndex& index, const TargetChecker& checker,
                                 const FeedbackTemplates& templates);

struct TokenTotals {
  std::int64_t input = 0;
  std::int64_t output = 0;
};

struct TrvConfig {
  int max_attempts = 3;
  FeedbackTemplates templates = FeedbackTemplates::defaults();
};

struct ChunkResult {
  std::size_t chunk_id = 0;
  ValidationOutcome outcome;
  int attempts_used = 0;
  TokenTotals tokens;
  bool accepted() const { return outcome.status == ValidationStatus::Accepted; }
};

// The bounded re-run loop: inject, prompt (with accumulated feedback), chat,
// validate. Stops on acceptance or after max_attempts. Transport and
// protocol errors burn an attempt with the transport feedback; auth errors
// propagate. `extra_references` extends the prompt reference section.
ChunkResult process_chunk(const dnx::Chunk& chunk, llm::ChatBackend& backend,
                          const MustPassSelector& selector, const dnx::ReferenceIndex& index,
                          const TargetChecker& checker, const TrvConfig& config,
                          const std::vector<std::string>* extra_references = nullptr);

// Chunks are independent; processes up to `inflight` concurrently and
// returns results ordered by chunk id.
std::vector<ChunkResult> process_chunks(const std::vector<dnx::Chunk>& chunks,
                                        llm::ChatBackend& backend, const MustPassSelector& selector,
                                        const dnx::ReferenceIndex& index, const TargetChecker& checker,
                                        const TrvConfig& config, unsigned inflight = 1);

}  // namespace squatscan::trv
