#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "visloop/session.hpp"

namespace visloop {

struct ClientConfig {
  std::string base_url = "https://api.openai.com/v1";
  // Name of the environment variable holding the API key. Keys are never
  // accepted any other way.
  std::string api_key_env = "OPENAI_API_KEY";
  std::string model_id = "gpt-4.1";
  double temperature = 0.6;
  int max_retries = 3;
  Seconds request_timeout{120.0};
  Seconds initial_backoff{1.0};
  std::optional<int> max_tokens;

  // Throws UsageError.
  void validate() const;
};

struct TokenUsage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
};

struct ModelResponse {
  std::string text;
  std::optional<TokenUsage> usage;
  double latency = 0.0;
  int retries = 0;
};

// Anything that turns a context into assistant text. Implementations must be
// safe to call from several sessions at once.
class ChatClient {
 public:
  virtual ~ChatClient() = default;

  // Pre: messages non-empty and messages.front() is a System message.
  virtual ModelResponse complete(const std::vector<Message>& messages, const ClientConfig& config) = 0;
};

// Replays a fixed list of replies; the k-th call returns script[k].
class ScriptedClient final : public ChatClient {
 public:
  // Throws UsageError on an empty script.
  explicit ScriptedClient(std::vector<std::string> script);

  // Throws ScriptExhausted once every entry has been served.
  ModelResponse complete(const std::vector<Message>& messages, const ClientConfig& config) override;

  std::size_t calls() const;

 private:
  std::vector<std::string> script_;
  mutable std::mutex mutex_;
  std::size_t next_ = 0;
};

std::shared_ptr<ScriptedClient> scripted_client(std::vector<std::string> script);

struct HttpRequest {
  std::string url;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
  Seconds timeout{120.0};
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

// POSTs a request. Throws TransportError when no HTTP response was obtained.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

// cpp-httplib backed transport; http and https URLs.
std::shared_ptr<HttpTransport> make_default_transport();

using Sleeper = std::function<void(Seconds)>;
Sleeper real_sleeper();

// Retries transport failures and 429/5xx replies with exponential backoff
// (initial_backoff * 2^attempt). `retries` receives the number of retries made.
HttpResponse post_with_retries(HttpTransport& transport, const HttpRequest& request, int max_retries,
                               Seconds initial_backoff, const Sleeper& sleeper, int* retries = nullptr);

// Throws AuthError when the variable is unset or empty.
std::string resolve_api_key(const ClientConfig& config);

// "data:image/png;base64,<payload>"
std::string encode_image(const ImageBlob& image);

// Chat-completions request body: text-only messages carry a string content,
// messages with images carry an array of text and image_url parts.
nlohmann::json build_chat_request(const std::vector<Message>& messages, const ClientConfig& config);

// Extracts choices[0].message.content. Throws EmptyResponse or ProviderError.
ModelResponse parse_chat_response(std::string_view body);

class HttpChatClient final : public ChatClient {
 public:
  explicit HttpChatClient(std::shared_ptr<HttpTransport> transport = make_default_transport(),
                          Sleeper sleeper = real_sleeper());

  ModelResponse complete(const std::vector<Message>& messages, const ClientConfig& config) override;

 private:
  std::shared_ptr<HttpTransport> transport_;
  Sleeper sleeper_;
};

}  // namespace visloop
