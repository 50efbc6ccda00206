#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "squatscan/config.hpp"
#include "squatscan/dnx.hpp"
#include "squatscan/ingest.hpp"
#include "squatscan/llm.hpp"
#include "squatscan/report.hpp"
#include "squatscan/squatgen.hpp"
#include "squatscan/trv.hpp"
#include "squatscan/util.hpp"

namespace squatscan::cli {
namespace {

using Clock = std::chrono::steady_clock;

SuffixRuleSet load_psl(const PipelineConfig& cfg) {
  return SuffixRuleSet::from_file(cfg.resolved_data_dir() / "public_suffix_snapshot.dat");
}

std::vector<std::pair<std::uint32_t, std::string>> load_ranked_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open reference list: " + path.string());
  std::vector<std::pair<std::uint32_t, std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view v = trim(line);
    if (v.empty() || v.front() == '#') continue;
    auto comma = v.find(',');
    if (comma == std::string_view::npos) throw ParseError("expected rank,domain: " + std::string(v));
    out.emplace_back(static_cast<std::uint32_t>(std::stoul(std::string(v.substr(0, comma)))),
                     std::string(trim(v.substr(comma + 1))));
  }
  return out;
}

std::map<std::string, std::uint32_t> reference_ranks(const std::filesystem::path& path,
                                                     const SuffixRuleSet& psl) {
  std::map<std::string, std::uint32_t> out;
  if (path.empty()) return out;
  for (const auto& [rank, domain] : load_ranked_csv(path)) {
    try {
      out.emplace(registrable(parse_fqdn(normalize(domain), psl)), rank);
    } catch (const ParseError&) {
    }
  }
  return out;
}

std::vector<std::string> load_allowlist(const PipelineConfig& cfg) {
  std::vector<std::string> out;
  std::filesystem::path path = cfg.allowlist_path;
  if (path.empty()) {
    path = cfg.resolved_data_dir() / "target_allowlist.txt";
    if (!std::filesystem::exists(path)) return out;
  }
  std::ifstream in(path);
  if (!in) throw IoError("cannot open allowlist: " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    std::string_view v = trim(line);
    if (v.empty() || v.front() == '#') continue;
    out.emplace_back(v);
  }
  return out;
}

struct LoadedInputs {
  std::vector<Fqdn> fqdns;
  std::size_t skipped = 0;
};

LoadedInputs load_inputs(const std::filesystem::path& path, const SuffixRuleSet& psl) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open input list: " + path.string());
  LoadedInputs out;
  std::set<std::string> seen;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view v = trim(line);
    if (v.empty() || v.front() == '#') continue;
    try {
      Fqdn f = parse_fqdn(normalize(v), psl);
      if (seen.insert(f.raw).second) out.fqdns.push_back(std::move(f));
    } catch (const ParseError&) {
      ++out.skipped;
    }
  }
  return out;
}

trv::FeedbackTemplates load_templates(const PipelineConfig& cfg) {
  auto path = cfg.resolved_data_dir() / "feedback_templates.conf";
  if (std::filesystem::exists(path)) return trv::FeedbackTemplates::from_file(path);
  return trv::FeedbackTemplates::defaults();
}

std::unique_ptr<llm::ChatBackend> make_backend(const PipelineConfig& cfg,
                                               const squatgen::BaselineDetector& detector) {
  if (cfg.backend == "oracle") {
    llm::FaultProfile faults;
    faults.drop_rate = cfg.oracle_drop_rate;
    faults.hallucinate_rate = cfg.oracle_hallucinate_rate;
    faults.corrupt_format_rate = cfg.oracle_corrupt_format_rate;
    faults.fabricate_target_rate = cfg.oracle_fabricate_target_rate;
    faults.seed = cfg.seed;
    if (cfg.oracle_attempts_affected > 0) faults.attempts_affected = cfg.oracle_attempts_affected;
    return std::make_unique<llm::OracleBackend>(detector, faults);
  }
  if (cfg.backend == "http") {
    llm::HttpBackendConfig hc;
    hc.endpoint = cfg.backend_endpoint;
    hc.model = cfg.backend_model;
    hc.credential_env = cfg.backend_credential_env;
    hc.timeout_ms = cfg.backend_timeout_ms;
    hc.retry_backoff_ms = cfg.backend_retry_backoff_ms;
    hc.inflight = cfg.backend_inflight;
    if (hc.endpoint.empty()) throw ParseError("backend.endpoint is required for the http backend");
    return std::make_unique<llm::HttpChatBackend>(hc);
  }
  if (cfg.backend == "echo") {
    return std::make_unique<llm::EchoBackend>(cfg.echo_reply);
  }
  throw ParseError("unknown backend: " + cfg.backend);
}

// Shared by detect and eval: DNX pairing, TRV loop, verdict records.
struct PipelineRun {
  std::vector<report::VerdictRecord> records;
  std::size_t chunks_accepted = 0;
  std::size_t chunks_rejected = 0;
  trv::TokenTotals tokens;
  std::size_t inputs_skipped = 0;
  std::size_t input_count = 0;
};

PipelineRun run_pipeline(const PipelineConfig& cfg, const std::vector<Fqdn>& inputs,
                         const dnx::ReferenceIndex& index, const squatgen::BaselineDetector& detector) {
  dnx::LocalNgramEmbedder embedder;
  auto pairs = dnx::pair_inputs(inputs, index, embedder, cfg.jobs);
  auto chunks = dnx::sort_and_chunk(std::move(pairs), cfg.chunk_size);

  trv::MustPassSelector selector(detector);
  trv::OfflineChecker checker(index, load_allowlist(cfg));
  trv::TrvConfig trv_cfg;
  trv_cfg.max_attempts = cfg.max_attempts;
  trv_cfg.templates = load_templates(cfg);

  auto backend = make_backend(cfg, detector);
  auto results = trv::process_chunks(chunks, *backend, selector, index, checker, trv_cfg,
                                     static_cast<unsigned>(cfg.backend_inflight));

  PipelineRun run;
  run.input_count = inputs.size();
  for (const auto& r : results) {
    run.tokens.input += r.tokens.input;
    run.tokens.output += r.tokens.output;
    if (r.accepted()) {
      ++run.chunks_accepted;
      for (const auto& v : r.outcome.verdicts) {
        run.records.push_back(report::to_record(v, r.chunk_id, r.attempts_used));
      }
    } else {
      ++run.chunks_rejected;
      log_event("detect", "chunk_rejected",
                "chunk=" + std::to_string(r.chunk_id) +
                    " status=" + std::string(trv::to_string(r.outcome.status)));
    }
  }
  return run;
}

std::optional<report::CostModel> cost_model_for(const PipelineConfig& cfg) {
  report::CostTable table =
      cfg.cost_file.empty() ? report::CostTable::defaults() : report::CostTable::from_file(cfg.cost_file);
  auto m = table.find(cfg.cost_model);
  if (!m) {
    auto fallback = cfg.resolved_data_dir() / "cost_models.conf";
    if (cfg.cost_file.empty() && std::filesystem::exists(fallback)) {
      m = report::CostTable::from_file(fallback).find(cfg.cost_model);
    }
  }
  return m;
}

void write_summary_outputs(const PipelineConfig& cfg, const report::RunSummary& summary,
                           nlohmann::ordered_json extra = {}) {
  std::cout << report::render_summary_text(summary);
  if (cfg.summary_out.empty()) return;
  auto j = report::summary_to_json(summary);
  for (auto& [k, v] : extra.items()) j[k] = v;
  std::ofstream out(cfg.summary_out, std::ios::trunc);
  if (!out) throw IoError("cannot write summary: " + cfg.summary_out.string());
  out << j.dump(2) << "\n";
}

int emit_records_file(const PipelineConfig& cfg, std::vector<report::VerdictRecord> records) {
  if (cfg.verdicts_out.empty()) {
    report::emit_verdicts(std::move(records), std::cout);
    return kExitOk;
  }
  std::ofstream out(cfg.verdicts_out, std::ios::trunc);
  if (!out) throw IoError("cannot write verdicts: " + cfg.verdicts_out.string());
  report::emit_verdicts(std::move(records), out);
  return kExitOk;
}

dnx::ReferenceIndex load_or_build_index(const PipelineConfig& cfg, const SuffixRuleSet& psl,
                                        bool allow_memory_build) {
  dnx::LocalNgramEmbedder embedder;
  if (cfg.embedder != "local") throw ParseError("unknown embedder: " + cfg.embedder);
  if (!cfg.index_path.empty()) {
    if (!std::filesystem::exists(cfg.index_path)) {
      throw IoError("index sidecar not built: " + cfg.index_path.string());
    }
    auto idx = dnx::ReferenceIndex::load(cfg.index_path);
    if (idx.embedder_id() != embedder.id() || idx.dimension() != embedder.dimension()) {
      throw IoError("index sidecar was built by a different embedder (" + idx.embedder_id() +
                    "); rebuild required");
    }
    return idx;
  }
  if (!allow_memory_build || cfg.reference_csv.empty()) {
    throw IoError("no index path configured");
  }
  return dnx::ReferenceIndex::build(load_ranked_csv(cfg.reference_csv), embedder, psl, cfg.jobs);
}

}  // namespace

int cmd_ingest(const PipelineConfig& cfg) {
  auto psl = load_psl(cfg);
  if (cfg.store_path.empty()) {
    std::cerr << "error: store path not configured\n";
    return kExitInputError;
  }
  if (cfg.fqdn_out.empty()) {
    std::cerr << "error: out.fqdns path not configured\n";
    return kExitInputError;
  }

  ingest::FeedStats stats;
  std::vector<ingest::FeedRecord> records;
  auto consume = [&](const std::vector<ingest::FeedRecord>& recs) {
    records.insert(records.end(), recs.begin(), recs.end());
  };

  for (const auto& path : cfg.ct_feeds) {
    std::ifstream in(path);
    if (!in) {
      std::cerr << "error: cannot open CT feed: " << path.string() << "\n";
      return kExitInputError;
    }
    consume(ingest::parse_ct_stream(in, stats));
  }
  for (const auto& path : cfg.pdns_feeds) {
    std::ifstream in(path);
    if (!in) {
      std::cerr << "error: cannot open pDNS feed: " << path.string() << "\n";
      return kExitInputError;
    }
    consume(ingest::parse_pdns_stream(in, stats));
  }
  for (const auto& path : cfg.zone_feeds) {
    std::ifstream in(path);
    if (!in) {
      std::cerr << "error: cannot open zone feed: " << path.string() << "\n";
      return kExitInputError;
    }
    // origin from the filename stem unless the file carries $ORIGIN
    consume(ingest::parse_zone_stream(in, path.stem().string(), stats));
  }

  auto active = ingest::filter_active(records, psl);
  auto first_seen = ingest::first_seen_times(records);
  std::map<std::string, std::int64_t> active_seen;
  for (const auto& f : active) active_seen[f.raw] = first_seen[f.raw];

  ingest::ObservationStore store(cfg.store_path);
  auto fresh = store.new_observed(active_seen);

  std::ofstream out(cfg.fqdn_out, std::ios::trunc);
  if (!out) {
    std::cerr << "error: cannot write " << cfg.fqdn_out.string() << "\n";
    return kExitInputError;
  }
  for (const auto& name : fresh) out << name << "\n";

  std::printf("parsed=%llu skipped=%llu active=%zu new=%zu\n",
              static_cast<unsigned long long>(stats.ok),
              static_cast<unsigned long long>(stats.skipped), active.size(), fresh.size());
  return kExitOk;
}

int cmd_index(const PipelineConfig& cfg) {
  auto psl = load_psl(cfg);
  if (cfg.reference_csv.empty() || !std::filesystem::exists(cfg.reference_csv)) {
    std::cerr << "error: reference list not readable\n";
    return kExitInputError;
  }
  if (cfg.index_path.empty()) {
    std::cerr << "error: index path not configured\n";
    return kExitInputError;
  }
  dnx::LocalNgramEmbedder embedder;
  if (std::filesystem::exists(cfg.index_path)) {
    try {
      auto existing = dnx::ReferenceIndex::load(cfg.index_path);
      if (existing.embedder_id() != embedder.id() || existing.dimension() != embedder.dimension()) {
        std::cerr << "error: existing sidecar belongs to embedder " << existing.embedder_id()
                  << "; refusing to overwrite\n";
        return kExitIndexError;
      }
    } catch (const IoError&) {
      log_event("index", "corrupt_sidecar_rebuilt", cfg.index_path.string());
    }
  }
  auto idx = dnx::ReferenceIndex::build(load_ranked_csv(cfg.reference_csv), embedder, psl, cfg.jobs);
  idx.save(cfg.index_path);
  std::printf("entries=%zu embedder=%s dimension=%zu\n", idx.entries().size(),
              idx.embedder_id().c_str(), idx.dimension());
  return kExitOk;
}

int cmd_detect(const PipelineConfig& cfg) {
  auto psl = load_psl(cfg);
  if (cfg.inputs_path.empty() || !std::filesystem::exists(cfg.inputs_path)) {
    std::cerr << "error: input FQDN list not readable\n";
    return kExitInputError;
  }

  std::optional<dnx::ReferenceIndex> index;
  try {
    index = load_or_build_index(cfg, psl, true);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIndexError;
  }

  auto brands_path = cfg.brands_csv.empty() ? cfg.reference_csv : cfg.brands_csv;
  squatgen::BrandSet brands = squatgen::BrandSet::from_tranco_csv(brands_path, psl);
  squatgen::GeneratorTables tables = squatgen::GeneratorTables::load(cfg.resolved_data_dir());
  squatgen::BaselineDetector detector(brands, tables, psl);

  auto inputs = load_inputs(cfg.inputs_path, psl);
  if (inputs.skipped > 0) {
    log_event("detect", "inputs_skipped", std::to_string(inputs.skipped));
  }

  auto run = run_pipeline(cfg, inputs.fqdns, *index, detector);
  emit_records_file(cfg, run.records);

  auto summary = report::summarize(run.records, reference_ranks(cfg.reference_csv, psl),
                                   run.chunks_accepted, run.chunks_rejected, run.tokens,
                                   cost_model_for(cfg));
  write_summary_outputs(cfg, summary);
  return run.chunks_rejected > 0 ? kExitPartial : kExitOk;
}

int cmd_baseline(const PipelineConfig& cfg) {
  auto psl = load_psl(cfg);
  if (cfg.inputs_path.empty() || !std::filesystem::exists(cfg.inputs_path)) {
    std::cerr << "error: input FQDN list not readable\n";
    return kExitInputError;
  }
  auto brands_path = cfg.brands_csv.empty() ? cfg.reference_csv : cfg.brands_csv;
  squatgen::BrandSet brands = squatgen::BrandSet::from_tranco_csv(brands_path, psl);
  squatgen::GeneratorTables tables = squatgen::GeneratorTables::load(cfg.resolved_data_dir());
  squatgen::BaselineDetector detector(brands, tables, psl);

  auto inputs = load_inputs(cfg.inputs_path, psl);
  std::vector<report::VerdictRecord> records;
  for (const auto& f : inputs.fqdns) {
    if (auto v = detector.detect(f)) {
      records.push_back(report::to_record(*v, 0, 0));
    }
  }
  emit_records_file(cfg, records);

  if (!cfg.labels_path.empty()) {
    std::ifstream in(cfg.labels_path);
    if (!in) {
      std::cerr << "error: cannot open labels: " << cfg.labels_path.string() << "\n";
      return kExitInputError;
    }
    auto labels = squatgen::load_dataset_jsonl(in);
    std::map<std::string, std::set<std::string>> detected;  // input -> targets
    for (const auto& r : records) detected[r.input].insert(r.target);
    std::map<std::string, std::pair<std::size_t, std::size_t>> per_type;  // labeled, recalled
    for (const auto& e : labels) {
      if (e.type == "benign") continue;
      auto raw = normalize(e.fqdn);
      auto& row = per_type[e.type];
      ++row.first;
      auto it = detected.find(raw);
      if (it != detected.end() && it->second.count(e.target)) ++row.second;
    }
    std::printf("type        labeled  recalled  recall\n");
    for (const auto& [ty, row] : per_type) {
      double recall = row.first == 0 ? 0.0 : 100.0 * row.second / row.first;
      std::printf("%-10s %8zu %9zu  %5.1f%%\n", ty.c_str(), row.first, row.second, recall);
    }
  }
  return kExitOk;
}

int cmd_eval(const PipelineConfig& cfg) {
  auto psl = load_psl(cfg);
  if (cfg.labels_path.empty() || !std::filesystem::exists(cfg.labels_path)) {
    std::cerr << "error: no labels\n";
    return kExitInputError;
  }
  std::ifstream labels_in(cfg.labels_path);
  auto labels = squatgen::load_dataset_jsonl(labels_in);
  if (labels.empty()) {
    std::cerr << "error: no labels\n";
    return kExitInputError;
  }

  std::optional<dnx::ReferenceIndex> index;
  try {
    index = load_or_build_index(cfg, psl, true);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIndexError;
  }

  auto brands_path = cfg.brands_csv.empty() ? cfg.reference_csv : cfg.brands_csv;
  squatgen::BrandSet brands = squatgen::BrandSet::from_tranco_csv(brands_path, psl);
  squatgen::GeneratorTables tables = squatgen::GeneratorTables::load(cfg.resolved_data_dir());
  squatgen::BaselineDetector detector(brands, tables, psl);

  std::vector<Fqdn> inputs;
  std::set<std::string> seen;
  for (const auto& e : labels) {
    Fqdn f = parse_fqdn(normalize(e.fqdn), psl);
    if (seen.insert(f.raw).second) inputs.push_back(std::move(f));
  }

  auto started = Clock::now();
  auto run = run_pipeline(cfg, inputs, *index, detector);
  double elapsed_s =
      std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - started).count() / 1000.0;

  std::map<std::string, std::set<std::string>> verdict_targets;  // input raw -> targets
  for (const auto& r : run.records) verdict_targets[r.input].insert(r.target);

  struct Row {
    std::size_t labeled = 0;
    std::size_t correct = 0;
  };
  std::map<std::string, Row> per_type;
  std::size_t benign_total = 0;
  std::size_t false_positives = 0;
  for (const auto& e : labels) {
    std::string raw = normalize(e.fqdn);
    if (e.type == "benign") {
      ++benign_total;
      if (verdict_targets.count(raw)) ++false_positives;
      continue;
    }
    auto& row = per_type[e.type];
    ++row.labeled;
    auto it = verdict_targets.find(raw);
    if (it != verdict_targets.end() && it->second.count(e.target)) ++row.correct;
  }

  auto accuracy = [](const Row& r) {
    return r.labeled == 0 ? 0.0
                          : std::round(1000.0 * static_cast<double>(r.correct) /
                                       static_cast<double>(r.labeled)) /
                                10.0;
  };

  Row total;
  nlohmann::ordered_json per_type_json = nlohmann::ordered_json::object();
  std::printf("type        labeled  correct  accuracy\n");
  for (const auto& [ty, row] : per_type) {
    total.labeled += row.labeled;
    total.correct += row.correct;
    std::printf("%-10s %8zu %8zu  %6.1f%%\n", ty.c_str(), row.labeled, row.correct, accuracy(row));
    per_type_json[ty] = {{"labeled", row.labeled}, {"correct", row.correct}, {"accuracy", accuracy(row)}};
  }
  std::printf("%-10s %8zu %8zu  %6.1f%%\n", "total", total.labeled, total.correct, accuracy(total));
  std::printf("benign: %zu, false positives: %zu\n", benign_total, false_positives);
  std::printf("chunks: accepted=%zu rejected=%zu\n", run.chunks_accepted, run.chunks_rejected);
  std::printf("wall time: %.2f s\n", elapsed_s);

  if (!cfg.summary_out.empty()) {
    auto cost = cost_model_for(cfg);
    nlohmann::ordered_json j{
        {"per_type", per_type_json},
        {"total", {{"labeled", total.labeled}, {"correct", total.correct}, {"accuracy", accuracy(total)}}},
        {"benign", benign_total},
        {"false_positives", false_positives},
        {"chunks", {{"accepted", run.chunks_accepted}, {"rejected", run.chunks_rejected}}},
        {"tokens", {{"input", run.tokens.input}, {"output", run.tokens.output}}},
        {"elapsed_s", elapsed_s},
    };
    if (cost) {
      j["cost_usd"] = report::estimate_cost_usd(run.tokens.input, run.tokens.output, *cost);
      j["cost_model"] = cost->name;
    }
    std::ofstream out(cfg.summary_out, std::ios::trunc);
    if (!out) throw IoError("cannot write summary: " + cfg.summary_out.string());
    out << j.dump(2) << "\n";
  }
  return run.chunks_rejected > 0 ? kExitPartial : kExitOk;
}

int cmd_report(const PipelineConfig& cfg) {
  auto psl = load_psl(cfg);
  if (cfg.verdicts_in.empty() || !std::filesystem::exists(cfg.verdicts_in)) {
    std::cerr << "error: verdicts file not readable\n";
    return kExitInputError;
  }
  std::ifstream in(cfg.verdicts_in);
  auto records = report::load_verdicts_jsonl(in);
  std::set<std::size_t> chunks;
  for (const auto& r : records) chunks.insert(r.chunk);
  trv::TokenTotals tokens{cfg.report_input_tokens, cfg.report_output_tokens};
  auto summary = report::summarize(records, reference_ranks(cfg.reference_csv, psl), chunks.size(), 0,
                                   tokens, cost_model_for(cfg));
  write_summary_outputs(cfg, summary);
  return kExitOk;
}

}  // namespace squatscan::cli
