#include <iostream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>
#include <visloop/errors.hpp>
#include <visloop/process.hpp>

#include "commands.hpp"

using namespace visloop;
using namespace visloop::cli;

int main(int argc, char** argv) {
  install_child_cleanup_on_signals(Seconds{1.0});
  spdlog::set_default_logger(spdlog::stderr_color_mt("visloop"));
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"visloop: run, evaluate and analyze code-writing multimodal agents"};
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error")
      ->capture_default_str()
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  ConfigFlags run_flags, bench_flags, analyze_flags, check_flags, replay_flags;

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Answer one query about one or more images");
  run->add_option("images", run_args.images, "Input images (PNG or JPEG)")->required();
  run->add_option("--query,-q", run_args.query, "The question")->required();
  run->add_option("--mode", run_args.mode, "agent or cot")->capture_default_str();
  run->add_option("--trace-id", run_args.trace_id, "Trace id and file stem")->capture_default_str();
  run->add_option("--template", run_args.template_file, "Prompt template file replacing the built-in one")
      ->check(CLI::ExistingFile);
  run_flags.add_common_flags(*run);
  run_flags.add_model_flags(*run);
  run_flags.add_kernel_flags(*run);

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Evaluate a JSONL dataset and write a report");
  bench->add_option("--dataset,-d", bench_args.dataset, "JSONL dataset")->required();
  bench->add_option("--mode", bench_args.mode, "agent or cot")->capture_default_str();
  bench->add_option("--dataset-id", bench_args.dataset_id, "Defaults to the dataset file stem");
  bench->add_option("--label", bench_args.label, "Method label for the table row");
  bench->add_option("--baseline", bench_args.baseline, "report.json to compute the delta against");
  bench_flags.add_common_flags(*bench);
  bench_flags.add_model_flags(*bench);
  bench_flags.add_kernel_flags(*bench);
  bench_flags.add_option(*bench, "--parallelism,-j", "parallelism", "Concurrent sessions", 'u');

  AnalyzeArgs analyze_args;
  auto* analyze = app.add_subcommand("analyze", "Categorize the code snippets found in trace files");
  analyze->add_option("--traces,-t", analyze_args.traces, "Directory searched recursively for traces")->required();
  analyze->add_option("--cluster", analyze_args.cluster_k, "Also run k-means with this k");
  analyze->add_option("--rules", analyze_args.rules, "Rule table replacing the built-in one")
      ->check(CLI::ExistingFile);
  analyze_flags.add_common_flags(*analyze);
  analyze_flags.add_option(*analyze, "--seed", "seed", "k-means seed", 'u');
  analyze_flags.add_option(*analyze, "--embedder", "embedder", "lexical or remote", 's');
  analyze_flags.add_option(*analyze, "--embedding-model", "embedding_model", "Model for --embedder remote", 's');
  analyze_flags.add_option(*analyze, "--base-url", "base_url", "Endpoint for --embedder remote", 's');
  analyze_flags.add_option(*analyze, "--api-key-env", "api_key_env", "API key variable for --embedder remote", 's');

  auto* check = app.add_subcommand("kernel-check", "Run the protocol conformance checks against a kernel");
  check_flags.add_common_flags(*check);
  check_flags.add_kernel_flags(*check);

  ReplayArgs replay_args;
  auto* replay = app.add_subcommand("replay", "Re-run a trace's model turns against a kernel and compare");
  replay->add_option("trace", replay_args.trace, "Trace file")->required();
  replay_flags.add_common_flags(*replay);
  replay_flags.add_kernel_flags(*replay);
  replay_flags.add_model_flags(*replay);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*run) return cmd_run(run_flags.resolve(), run_args);
    if (*bench) return cmd_bench(bench_flags.resolve(), bench_args);
    if (*analyze) return cmd_analyze(analyze_flags.resolve(), analyze_args);
    if (*check) return cmd_kernel_check(check_flags.resolve());
    if (*replay) return cmd_replay(replay_flags.resolve(), replay_args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << std::endl;
    return kExitUsage;
  } catch (const SchemaError& e) {
    std::cerr << "data error: " << e.what() << std::endl;
    return kExitData;
  } catch (const AuthError& e) {
    std::cerr << "configuration error: " << e.what() << std::endl;
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitFailure;
  }
  return kExitUsage;
}
