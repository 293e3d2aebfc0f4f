#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cli_config.hpp"

namespace visloop::cli {

struct RunArgs {
  std::vector<std::filesystem::path> images;
  std::string query;
  std::string mode = "agent";
  std::string trace_id = "run";
  std::optional<std::filesystem::path> template_file;
};
int cmd_run(const CliConfig& cfg, const RunArgs& args);

struct BenchArgs {
  std::filesystem::path dataset;
  std::string mode = "agent";
  std::string dataset_id;
  std::string label;
  std::optional<std::filesystem::path> baseline;
};
int cmd_bench(const CliConfig& cfg, const BenchArgs& args);

struct AnalyzeArgs {
  std::filesystem::path traces;
  std::size_t cluster_k = 0;
  std::optional<std::filesystem::path> rules;
};
int cmd_analyze(const CliConfig& cfg, const AnalyzeArgs& args);

int cmd_kernel_check(const CliConfig& cfg);

struct ReplayArgs {
  std::filesystem::path trace;
};
int cmd_replay(const CliConfig& cfg, const ReplayArgs& args);

}  // namespace visloop::cli
