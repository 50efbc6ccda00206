#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "squatscan/trv.hpp"

namespace squatscan::report {

// One output row; the JSONL schema is fixed and byte-stable.
struct VerdictRecord {
  std::string input;
  std::string s, d, sx;
  std::string type;
  std::string target;
  std::size_t chunk = 0;
  int attempts = 0;
  std::string source;  // "llm", "baseline" or "oracle"
};

VerdictRecord to_record(const Verdict& verdict, std::size_t chunk, int attempts);

// Sorts by (input, type, target) and writes one JSON object per line.
// Returns the record count.
std::size_t emit_verdicts(std::vector<VerdictRecord> records, std::ostream& out);

std::vector<VerdictRecord> load_verdicts_jsonl(std::istream& in);

// USD per 1M input/output tokens for one backend.
struct CostModel {
  std::string name;
  double input_per_mtok = 0.0;
  double output_per_mtok = 0.0;
};

class CostTable {
 public:
  static CostTable defaults();
  static CostTable from_file(const std::filesystem::path& path);
  std::optional<CostModel> find(const std::string& name) const;

 private:
  std::vector<CostModel> models_;
};

// input/1e6 * in_rate + output/1e6 * out_rate, rounded to cents.
double estimate_cost_usd(std::int64_t input_tokens, std::int64_t output_tokens, const CostModel& model);

// Tranco-style popularity buckets for targeted domains. Unranked targets
// share the ">1M" bucket.
inline constexpr std::array<const char*, 5> kBucketLabels = {"<1k", "1k-10k", "10k-100k", "100k-1M",
                                                             ">1M"};
std::size_t bucket_of(std::optional<std::uint32_t> rank);

struct RunSummary {
  std::map<std::string, std::size_t> by_type;
  std::array<std::size_t, 5> buckets{};
  std::size_t verdicts = 0;
  std::size_t chunks_accepted = 0;
  std::size_t chunks_rejected = 0;
  trv::TokenTotals tokens;
  std::optional<double> cost_usd;
  std::string cost_model;
};

RunSummary summarize(const std::vector<VerdictRecord>& records,
                     const std::map<std::string, std::uint32_t>& reference_ranks,
                     std::size_t chunks_accepted, std::size_t chunks_rejected,
                     trv::TokenTotals tokens, const std::optional<CostModel>& cost);

// Aligned human-readable table with one-decimal percentages.
std::string render_summary_text(const RunSummary& summary);

nlohmann::ordered_json summary_to_json(const RunSummary& summary);

}  // namespace squatscan::report
