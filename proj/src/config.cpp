#include "squatscan/config.hpp"

#include <cstdlib>
#include <fstream>

#include "squatscan/util.hpp"

#ifndef SQUATSCAN_SOURCE_DATA_DIR
#define SQUATSCAN_SOURCE_DATA_DIR "data"
#endif

namespace squatscan::cli {
namespace {

std::vector<std::filesystem::path> parse_path_list(const std::string& value) {
  std::vector<std::filesystem::path> out;
  for (const auto& part : split(value, ',')) {
    auto t = trim(part);
    if (!t.empty()) out.emplace_back(std::string(t));
  }
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    return std::stod(value);
  } catch (...) {
    throw ParseError("bad numeric value for " + key + ": " + value);
  }
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
  try {
    return std::stoll(value);
  } catch (...) {
    throw ParseError("bad integer value for " + key + ": " + value);
  }
}

}  // namespace

void PipelineConfig::apply_override(const std::string& key, const std::string& value) {
  if (key == "data_dir") data_dir = value;
  else if (key == "feeds.ct") ct_feeds = parse_path_list(value);
  else if (key == "feeds.pdns") pdns_feeds = parse_path_list(value);
  else if (key == "feeds.zone") zone_feeds = parse_path_list(value);
  else if (key == "store") store_path = value;
  else if (key == "out.fqdns") fqdn_out = value;
  else if (key == "reference") reference_csv = value;
  else if (key == "brands") brands_csv = value;
  else if (key == "index") index_path = value;
  else if (key == "allowlist") allowlist_path = value;
  else if (key == "embedder") embedder = value;
  else if (key == "chunk_size") chunk_size = static_cast<std::size_t>(parse_int(key, value));
  else if (key == "max_attempts") max_attempts = static_cast<int>(parse_int(key, value));
  else if (key == "jobs") jobs = static_cast<unsigned>(parse_int(key, value));
  else if (key == "seed") seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "backend") backend = value;
  else if (key == "backend.endpoint") backend_endpoint = value;
  else if (key == "backend.model") backend_model = value;
  else if (key == "backend.credential_env") backend_credential_env = value;
  else if (key == "backend.timeout_ms") backend_timeout_ms = static_cast<int>(parse_int(key, value));
  else if (key == "backend.inflight") backend_inflight = static_cast<int>(parse_int(key, value));
  else if (key == "backend.retry_backoff_ms")
    backend_retry_backoff_ms = static_cast<int>(parse_int(key, value));
  else if (key == "backend.echo_reply") echo_reply = value;
  else if (key == "oracle.drop_rate") oracle_drop_rate = parse_double(key, value);
  else if (key == "oracle.hallucinate_rate") oracle_hallucinate_rate = parse_double(key, value);
  else if (key == "oracle.corrupt_format_rate") oracle_corrupt_format_rate = parse_double(key, value);
  else if (key == "oracle.fabricate_target_rate")
    oracle_fabricate_target_rate = parse_double(key, value);
  else if (key == "oracle.attempts_affected")
    oracle_attempts_affected = static_cast<int>(parse_int(key, value));
  else if (key == "inputs") inputs_path = value;
  else if (key == "labels") labels_path = value;
  else if (key == "out.verdicts") verdicts_out = value;
  else if (key == "out.summary") summary_out = value;
  else if (key == "cost.model") cost_model = value;
  else if (key == "cost.file") cost_file = value;
  else if (key == "report.input_tokens") report_input_tokens = parse_int(key, value);
  else if (key == "report.output_tokens") report_output_tokens = parse_int(key, value);
  else if (key == "verdicts") verdicts_in = value;
  else throw ParseError("unknown config key: " + key);
}

PipelineConfig PipelineConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  PipelineConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view v = trim(line);
    if (v.empty() || v.front() == '#') continue;
    auto eq = v.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("config line " + std::to_string(lineno) + " is not key = value");
    }
    cfg.apply_override(std::string(trim(v.substr(0, eq))), std::string(trim(v.substr(eq + 1))));
  }
  return cfg;
}

std::filesystem::path PipelineConfig::resolved_data_dir() const {
  if (!data_dir.empty()) return data_dir;
  if (const char* env = std::getenv("SQUATSCAN_DATA"); env != nullptr && *env != '\0') return env;
  return SQUATSCAN_SOURCE_DATA_DIR;
}

}  // namespace squatscan::cli
