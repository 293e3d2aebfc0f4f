#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <visloop/model_client.hpp>
#include <visloop/session.hpp>
#include <visloop/supervisor.hpp>
#include <visloop/taxonomy.hpp>

namespace visloop::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitMaxTurns = 2;
inline constexpr int kExitUsage = 64;
inline constexpr int kExitData = 65;
inline constexpr int kExitConfig = 78;

// Every setting a command can take. Defaults, then the --config file, then
// flags; docs/CONFIG.md lists the keys.
struct CliConfig {
  std::string model_id = "gpt-4.1";
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key_env = "OPENAI_API_KEY";
  double temperature = 0.6;
  std::size_t max_turns = 10;
  double exec_timeout = 60.0;
  int max_retries = 3;
  std::optional<int> max_tokens;
  double request_timeout = 120.0;
  std::size_t parallelism = 1;
  std::filesystem::path output_dir = "visloop_out";
  std::vector<std::string> kernel_command = {"python3", "-m", "visloop_kernel"};
  std::string restart_policy = "restart_and_report";
  double startup_timeout = 30.0;
  bool include_timing = true;
  std::uint64_t seed = 0;
  std::string embedder = "lexical";
  std::string embedding_model = "text-embedding-3-large";
  std::string mock_model;
  bool mock_kernel = false;

  // Unknown keys and mistyped values throw UsageError naming `origin`.
  void apply(const nlohmann::json& doc, std::string_view origin);
  nlohmann::json to_json() const;
  void validate() const;

  SessionConfig session() const;
  ClientConfig client() const;
  SupervisorConfig supervisor() const;
  RemoteEmbeddingConfig embedding() const;
};

// Collects flag values as JSON overrides so they can be layered over the
// config file after parsing.
class ConfigFlags {
 public:
  void add_model_flags(CLI::App& app);
  void add_kernel_flags(CLI::App& app);
  void add_common_flags(CLI::App& app);
  void add_option(CLI::App& app, const std::string& flag, const std::string& key, const std::string& help,
                  char kind);

  // Defaults, then the file given with --config, then the flags.
  CliConfig resolve() const;

 private:
  std::optional<std::filesystem::path> config_path_;
  nlohmann::json overrides_ = nlohmann::json::object();
};

std::filesystem::path locate_mock_kernel();

// The scripted responses for one item: a JSON array of strings, an object
// with "responses", or an object with per-id "items" and a "default".
std::optional<std::vector<std::string>> load_mock_script(const std::filesystem::path& path,
                                                         const std::string& item_id);

std::shared_ptr<ChatClient> make_client(const CliConfig& cfg, const std::string& item_id);

void echo_config(const CliConfig& cfg, std::string_view command);

void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace visloop::cli
