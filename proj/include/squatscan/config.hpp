#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace squatscan::cli {

// Single plain-text key-value configuration with command-line overrides.
// Credentials never live here: the config names the environment variable.
struct PipelineConfig {
  std::filesystem::path data_dir;  // bundled tables and snapshots

  // ingestion
  std::vector<std::filesystem::path> ct_feeds;
  std::vector<std::filesystem::path> pdns_feeds;
  std::vector<std::filesystem::path> zone_feeds;
  std::filesystem::path store_path;
  std::filesystem::path fqdn_out;

  // reference data
  std::filesystem::path reference_csv;  // ranked list backing the index
  std::filesystem::path brands_csv;     // brand set; defaults to reference_csv
  std::filesystem::path index_path;
  std::filesystem::path allowlist_path;

  // pipeline
  std::string embedder = "local";
  std::size_t chunk_size = 100;
  int max_attempts = 3;
  unsigned jobs = 0;  // 0 = hardware concurrency
  std::uint64_t seed = 1;

  // backend
  std::string backend = "oracle";  // oracle | http | echo
  std::string backend_endpoint;
  std::string backend_model;
  std::string backend_credential_env;
  int backend_timeout_ms = 60000;
  int backend_inflight = 4;
  int backend_retry_backoff_ms = 250;
  std::string echo_reply = "[]";

  // oracle faults
  double oracle_drop_rate = 0.0;
  double oracle_hallucinate_rate = 0.0;
  double oracle_corrupt_format_rate = 0.0;
  double oracle_fabricate_target_rate = 0.0;
  int oracle_attempts_affected = 0;  // 0 = unlimited

  // outputs
  std::filesystem::path inputs_path;  // fqdn list consumed by detect/baseline/eval
  std::filesystem::path labels_path;  // dataset jsonl for eval / baseline recall
  std::filesystem::path verdicts_out;
  std::filesystem::path summary_out;

  // reporting
  std::string cost_model = "llama-3-70b";
  std::filesystem::path cost_file;
  std::int64_t report_input_tokens = 0;
  std::int64_t report_output_tokens = 0;
  std::filesystem::path verdicts_in;

  static PipelineConfig from_file(const std::filesystem::path& path);
  void apply_override(const std::string& key, const std::string& value);

  // data_dir fallback: config value, SQUATSCAN_DATA env, compiled default.
  std::filesystem::path resolved_data_dir() const;
};

// Exit codes shared by every command: 0 success, 2 input error, 3 index
// error, 4 partial acceptance.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitIndexError = 3;
inline constexpr int kExitPartial = 4;

int cmd_ingest(const PipelineConfig& config);
int cmd_index(const PipelineConfig& config);
int cmd_detect(const PipelineConfig& config);
int cmd_baseline(const PipelineConfig& config);
int cmd_eval(const PipelineConfig& config);
int cmd_report(const PipelineConfig& config);

}  // namespace squatscan::cli
