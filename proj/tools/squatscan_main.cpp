#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "squatscan/config.hpp"
#include "squatscan/util.hpp"

namespace {

using squatscan::cli::PipelineConfig;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value
};

PipelineConfig build_config(const CommonArgs& args) {
  PipelineConfig cfg;
  if (!args.config_path.empty()) cfg = PipelineConfig::from_file(args.config_path);
  for (const auto& kv : args.overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw squatscan::ParseError("--set expects key=value, got: " + kv);
    }
    cfg.apply_override(std::string(squatscan::trim(kv.substr(0, eq))),
                       std::string(squatscan::trim(kv.substr(eq + 1))));
  }
  return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "key = value configuration file");
  cmd->add_option("--set", args.overrides, "override a config key (key=value, repeatable)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"squatscan - domain squatting detection pipeline"};
  app.require_subcommand(1);

  CommonArgs args;
  int (*body)(const PipelineConfig&) = nullptr;

  auto wire = [&](CLI::App* cmd, int (*fn)(const PipelineConfig&)) {
    add_common(cmd, args);
    cmd->callback([&body, fn] { body = fn; });
    return cmd;
  };

  auto* ingest =
      wire(app.add_subcommand("ingest", "parse feeds, filter active names, emit new FQDNs"),
           squatscan::cli::cmd_ingest);
  auto* index = wire(app.add_subcommand("index", "build and persist the reference index"),
                     squatscan::cli::cmd_index);
  auto* detect = wire(app.add_subcommand("detect", "pair, chunk, analyze and validate FQDNs"),
                      squatscan::cli::cmd_detect);
  auto* baseline = wire(app.add_subcommand("baseline", "rule-based detection over an FQDN list"),
                        squatscan::cli::cmd_baseline);
  auto* eval = wire(app.add_subcommand("eval", "score detection against a labeled dataset"),
                    squatscan::cli::cmd_eval);
  auto* rep = wire(app.add_subcommand("report", "summarize a verdict file"),
                   squatscan::cli::cmd_report);
  (void)ingest;
  (void)index;
  (void)detect;
  (void)baseline;
  (void)eval;
  (void)rep;

  CLI11_PARSE(app, argc, argv);

  try {
    PipelineConfig cfg = build_config(args);
    return body(cfg);
  } catch (const squatscan::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return squatscan::cli::kExitInputError;
  } catch (const squatscan::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return squatscan::cli::kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
