#include "cli_config.hpp"

#include <unistd.h>

#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>
#include <visloop/errors.hpp>
#include <visloop/trace_io.hpp>

#ifndef VISLOOP_DEFAULT_MOCK_KERNEL
#define VISLOOP_DEFAULT_MOCK_KERNEL "mock_kernel"
#endif

namespace visloop::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
T get_as(const json& value, std::string_view key, std::string_view origin) {
  try {
    return value.get<T>();
  } catch (const json::exception&) {
    throw UsageError(std::string(origin) + ": wrong type for '" + std::string(key) + "'");
  }
}

std::vector<std::string> split_words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> words;
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

}  // namespace

void CliConfig::apply(const json& doc, std::string_view origin) {
  if (!doc.is_object()) {
    throw UsageError(std::string(origin) + ": expected a JSON object");
  }
  for (const auto& [key, value] : doc.items()) {
    if (key == "model_id") model_id = get_as<std::string>(value, key, origin);
    else if (key == "base_url") base_url = get_as<std::string>(value, key, origin);
    else if (key == "api_key_env") api_key_env = get_as<std::string>(value, key, origin);
    else if (key == "temperature") temperature = get_as<double>(value, key, origin);
    else if (key == "max_turns") max_turns = get_as<std::size_t>(value, key, origin);
    else if (key == "exec_timeout") exec_timeout = get_as<double>(value, key, origin);
    else if (key == "max_retries") max_retries = get_as<int>(value, key, origin);
    else if (key == "max_tokens") {
      max_tokens = value.is_null() ? std::nullopt : std::optional<int>(get_as<int>(value, key, origin));
    } else if (key == "request_timeout") request_timeout = get_as<double>(value, key, origin);
    else if (key == "parallelism") parallelism = get_as<std::size_t>(value, key, origin);
    else if (key == "output_dir") output_dir = get_as<std::string>(value, key, origin);
    else if (key == "kernel_command") {
      kernel_command = value.is_string() ? split_words(value.get<std::string>())
                                         : get_as<std::vector<std::string>>(value, key, origin);
    } else if (key == "restart_policy") restart_policy = get_as<std::string>(value, key, origin);
    else if (key == "startup_timeout") startup_timeout = get_as<double>(value, key, origin);
    else if (key == "include_timing") include_timing = get_as<bool>(value, key, origin);
    else if (key == "seed") seed = get_as<std::uint64_t>(value, key, origin);
    else if (key == "embedder") embedder = get_as<std::string>(value, key, origin);
    else if (key == "embedding_model") embedding_model = get_as<std::string>(value, key, origin);
    else if (key == "mock_model") mock_model = get_as<std::string>(value, key, origin);
    else if (key == "mock_kernel") mock_kernel = get_as<bool>(value, key, origin);
    else throw UsageError(std::string(origin) + ": unknown key '" + key + "'");
  }
}

json CliConfig::to_json() const {
  return {
      {"model_id", model_id},
      {"base_url", base_url},
      {"api_key_env", api_key_env},
      {"temperature", temperature},
      {"max_turns", max_turns},
      {"exec_timeout", exec_timeout},
      {"max_retries", max_retries},
      {"max_tokens", max_tokens ? json(*max_tokens) : json(nullptr)},
      {"request_timeout", request_timeout},
      {"parallelism", parallelism},
      {"output_dir", output_dir.string()},
      {"kernel_command", kernel_command},
      {"restart_policy", restart_policy},
      {"startup_timeout", startup_timeout},
      {"include_timing", include_timing},
      {"seed", seed},
      {"embedder", embedder},
      {"embedding_model", embedding_model},
      {"mock_model", mock_model},
      {"mock_kernel", mock_kernel},
  };
}

void CliConfig::validate() const {
  session().validate();
  client().validate();
  if (parallelism == 0) throw UsageError("parallelism must be at least 1");
  if (output_dir.empty()) throw UsageError("output_dir must not be empty");
  if (!mock_kernel && kernel_command.empty()) throw UsageError("kernel_command must not be empty");
  if (startup_timeout <= 0) throw UsageError("startup_timeout must be positive");
  if (embedder != "lexical" && embedder != "remote") {
    throw UsageError("embedder must be 'lexical' or 'remote', got '" + embedder + "'");
  }
}

SessionConfig CliConfig::session() const {
  SessionConfig s;
  s.max_turns = max_turns;
  s.exec_timeout = Seconds{exec_timeout};
  s.temperature = temperature;
  s.model_id = mock_model.empty() ? model_id : "scripted";
  try {
    s.kernel_restart_policy = restart_policy_from_string(restart_policy);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return s;
}

ClientConfig CliConfig::client() const {
  ClientConfig c;
  c.base_url = base_url;
  c.api_key_env = api_key_env;
  c.model_id = mock_model.empty() ? model_id : "scripted";
  c.temperature = temperature;
  c.max_retries = max_retries;
  c.request_timeout = Seconds{request_timeout};
  c.max_tokens = max_tokens;
  return c;
}

SupervisorConfig CliConfig::supervisor() const {
  SupervisorConfig s;
  s.command = mock_kernel ? mock_kernel_command(locate_mock_kernel()) : kernel_command;
  s.startup_timeout = Seconds{startup_timeout};
  // Kernels run inside the output directory so their files stay there too.
  s.working_dir = output_dir / "kernel";
  fs::create_directories(*s.working_dir);
  s.restart_policy = session().kernel_restart_policy;
  return s;
}

RemoteEmbeddingConfig CliConfig::embedding() const {
  RemoteEmbeddingConfig e;
  e.base_url = base_url;
  e.api_key_env = api_key_env;
  e.model = embedding_model;
  e.max_retries = max_retries;
  e.request_timeout = Seconds{request_timeout};
  return e;
}

void ConfigFlags::add_option(CLI::App& app, const std::string& flag, const std::string& key,
                             const std::string& help, char kind) {
  auto& o = overrides_;
  switch (kind) {
    case 's':
      app.add_option_function<std::string>(flag, [&o, key](const std::string& v) { o[key] = v; }, help);
      break;
    case 'd':
      app.add_option_function<double>(flag, [&o, key](double v) { o[key] = v; }, help);
      break;
    case 'i':
      app.add_option_function<std::int64_t>(flag, [&o, key](std::int64_t v) { o[key] = v; }, help);
      break;
    case 'u':
      app.add_option_function<std::uint64_t>(flag, [&o, key](std::uint64_t v) { o[key] = v; }, help);
      break;
    case 'b':
      app.add_flag_function(flag, [&o, key](std::int64_t n) { o[key] = n > 0; }, help);
      break;
    default:
      throw UsageError("bad option kind");
  }
}

void ConfigFlags::add_common_flags(CLI::App& app) {
  app.add_option("--config", config_path_, "JSON config file (flat object, see CONFIG.md)")->check(CLI::ExistingFile);
  add_option(app, "--output-dir,-o", "output_dir", "Directory for every file the command writes", 's');
}

void ConfigFlags::add_model_flags(CLI::App& app) {
  add_option(app, "--model", "model_id", "Model id sent to the chat endpoint", 's');
  add_option(app, "--base-url", "base_url", "OpenAI-compatible endpoint base URL", 's');
  add_option(app, "--api-key-env", "api_key_env", "Name of the environment variable holding the API key", 's');
  add_option(app, "--temperature", "temperature", "Sampling temperature", 'd');
  add_option(app, "--max-turns", "max_turns", "Model calls allowed per session", 'u');
  add_option(app, "--max-retries", "max_retries", "Retries for transient HTTP failures", 'i');
  add_option(app, "--max-tokens", "max_tokens", "Completion token cap", 'i');
  add_option(app, "--request-timeout", "request_timeout", "Per-request HTTP timeout in seconds", 'd');
  add_option(app, "--mock-model", "mock_model", "Scripted responses (JSON) instead of a live endpoint", 's');
  app.add_flag_function(
      "--no-timing", [this](std::int64_t) { overrides_["include_timing"] = false; },
      "Leave wall times and latencies out of traces");
}

void ConfigFlags::add_kernel_flags(CLI::App& app) {
  add_option(app, "--kernel", "kernel_command", "Kernel command line, split on whitespace", 's');
  add_option(app, "--mock-kernel", "mock_kernel", "Use the bundled mock kernel", 'b');
  add_option(app, "--timeout", "exec_timeout", "Per-snippet execution timeout in seconds", 'd');
  add_option(app, "--startup-timeout", "startup_timeout", "Kernel handshake timeout in seconds", 'd');
  add_option(app, "--restart-policy", "restart_policy", "restart_and_report or fail_session", 's');
}

CliConfig ConfigFlags::resolve() const {
  CliConfig cfg;
  if (config_path_) {
    std::ifstream in(*config_path_);
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw UsageError(config_path_->string() + ": " + e.what());
    }
    cfg.apply(doc, config_path_->string());
  }
  cfg.apply(overrides_, "command line");
  cfg.validate();
  return cfg;
}

fs::path locate_mock_kernel() {
  std::error_code ec;
  const fs::path self = fs::read_symlink("/proc/self/exe", ec);
  if (!ec) {
    const fs::path sibling = self.parent_path() / "mock_kernel";
    if (fs::exists(sibling)) return sibling;
  }
  return VISLOOP_DEFAULT_MOCK_KERNEL;
}

std::optional<std::vector<std::string>> load_mock_script(const fs::path& path, const std::string& item_id) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read mock model script " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
  auto as_script = [&](const json& v) {
    if (!v.is_array()) throw UsageError(path.string() + ": a script must be an array of strings");
    return get_as<std::vector<std::string>>(v, "responses", path.string());
  };
  if (doc.is_array()) return as_script(doc);
  if (!doc.is_object()) throw UsageError(path.string() + ": expected an array or an object");
  if (doc.contains("responses")) return as_script(doc["responses"]);
  if (doc.contains("items") && doc["items"].contains(item_id)) return as_script(doc["items"][item_id]);
  if (doc.contains("default")) return as_script(doc["default"]);
  return std::nullopt;
}

std::shared_ptr<ChatClient> make_client(const CliConfig& cfg, const std::string& item_id) {
  if (cfg.mock_model.empty()) {
    return std::make_shared<HttpChatClient>();
  }
  auto script = load_mock_script(cfg.mock_model, item_id);
  // An item without a script gets an empty one; the session records the fault.
  return scripted_client(script.value_or(std::vector<std::string>{}));
}

void echo_config(const CliConfig& cfg, std::string_view command) {
  spdlog::info("{} effective config: {}", command, dump_json(cfg.to_json()));
}

void write_text(const fs::path& path, std::string_view text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("cannot write " + path.string());
}

}  // namespace visloop::cli
