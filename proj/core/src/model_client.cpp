#include "visloop/model_client.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>
#include <thread>

#include "visloop/errors.hpp"
#include "visloop/trace_io.hpp"

namespace visloop {
namespace {

using nlohmann::json;

bool is_transient_status(int status) {
  return status == 408 || status == 429 || status == 500 || status == 502 || status == 503 || status == 504;
}

std::string join_url(std::string base, std::string_view suffix) {
  while (!base.empty() && base.back() == '/') {
    base.pop_back();
  }
  return base + std::string(suffix);
}

}  // namespace

void ClientConfig::validate() const {
  if (max_retries < 0) {
    throw UsageError("max_retries must be non-negative");
  }
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw UsageError("temperature must lie in [0, 2]");
  }
  if (!(request_timeout.count() > 0.0)) {
    throw UsageError("request_timeout must be positive");
  }
  if (base_url.empty()) {
    throw UsageError("base_url must not be empty");
  }
}

ScriptedClient::ScriptedClient(std::vector<std::string> script) : script_(std::move(script)) {
  if (script_.empty()) {
    throw UsageError("scripted client needs at least one reply");
  }
}

ModelResponse ScriptedClient::complete(const std::vector<Message>& messages, const ClientConfig&) {
  if (messages.empty() || messages.front().role() != Role::System) {
    throw UsageError("context must start with a system message");
  }
  std::lock_guard lock(mutex_);
  if (next_ >= script_.size()) {
    throw ScriptExhausted("script of " + std::to_string(script_.size()) + " replies exhausted");
  }
  ModelResponse response;
  response.text = script_[next_++];
  return response;
}

std::size_t ScriptedClient::calls() const {
  std::lock_guard lock(mutex_);
  return next_;
}

std::shared_ptr<ScriptedClient> scripted_client(std::vector<std::string> script) {
  return std::make_shared<ScriptedClient>(std::move(script));
}

Sleeper real_sleeper() {
  return [](Seconds duration) { std::this_thread::sleep_for(duration); };
}

HttpResponse post_with_retries(HttpTransport& transport, const HttpRequest& request, int max_retries,
                               Seconds initial_backoff, const Sleeper& sleeper, int* retries) {
  for (int attempt = 0;; ++attempt) {
    if (retries) {
      *retries = attempt;
    }
    const bool can_retry = attempt < max_retries;
    const Seconds backoff = initial_backoff * static_cast<double>(1 << std::min(attempt, 16));
    try {
      HttpResponse response = transport.post(request);
      if (is_transient_status(response.status) && can_retry) {
        spdlog::warn("HTTP {} from {}, retrying in {:.2f}s", response.status, request.url, backoff.count());
        sleeper(backoff);
        continue;
      }
      return response;
    } catch (const TransportError& e) {
      if (!can_retry) {
        throw TransportError(std::string(e.what()) + " (after " + std::to_string(attempt) + " retries)");
      }
      spdlog::warn("transport error: {}, retrying in {:.2f}s", e.what(), backoff.count());
      sleeper(backoff);
    }
  }
}

std::string resolve_api_key(const ClientConfig& config) {
  const char* value = std::getenv(config.api_key_env.c_str());
  if (value == nullptr || *value == '\0') {
    throw AuthError("environment variable " + config.api_key_env + " is not set");
  }
  return value;
}

std::string encode_image(const ImageBlob& image) { return "data:image/png;base64," + image.to_base64(); }

json build_chat_request(const std::vector<Message>& messages, const ClientConfig& config) {
  json wire_messages = json::array();
  for (const auto& message : messages) {
    json entry = {{"role", std::string(to_string(message.role()))}};
    if (message.image_count() == 0) {
      entry["content"] = message.joined_text();
    } else {
      json content = json::array();
      for (const auto& part : message.parts()) {
        if (part.is_text()) {
          content.push_back({{"type", "text"}, {"text", part.as_text()}});
        } else {
          content.push_back({{"type", "image_url"}, {"image_url", {{"url", encode_image(part.as_image())}}}});
        }
      }
      entry["content"] = std::move(content);
    }
    wire_messages.push_back(std::move(entry));
  }
  json body = {
      {"model", config.model_id},
      {"temperature", config.temperature},
      {"messages", std::move(wire_messages)},
  };
  if (config.max_tokens) {
    body["max_tokens"] = *config.max_tokens;
  }
  return body;
}

ModelResponse parse_chat_response(std::string_view body) {
  json doc;
  try {
    doc = json::parse(body.begin(), body.end());
  } catch (const json::parse_error&) {
    throw ProviderError(200, std::string(body));
  }
  ModelResponse response;
  try {
    const json& content = doc.at("choices").at(0).at("message").at("content");
    if (content.is_string()) {
      response.text = content.get<std::string>();
    } else if (content.is_array()) {
      for (const auto& part : content) {
        if (part.value("type", "") == "text") {
          response.text += part.value("text", "");
        }
      }
    } else if (!content.is_null()) {
      throw ProviderError(200, std::string(body));
    }
  } catch (const json::exception&) {
    throw ProviderError(200, std::string(body));
  }
  if (doc.contains("usage") && doc["usage"].is_object()) {
    TokenUsage usage;
    usage.prompt_tokens = doc["usage"].value("prompt_tokens", std::int64_t{0});
    usage.completion_tokens = doc["usage"].value("completion_tokens", std::int64_t{0});
    response.usage = usage;
  }
  if (response.text.empty()) {
    throw EmptyResponse("endpoint returned empty content");
  }
  return response;
}

HttpChatClient::HttpChatClient(std::shared_ptr<HttpTransport> transport, Sleeper sleeper)
    : transport_(std::move(transport)), sleeper_(std::move(sleeper)) {}

ModelResponse HttpChatClient::complete(const std::vector<Message>& messages, const ClientConfig& config) {
  config.validate();
  if (messages.empty() || messages.front().role() != Role::System) {
    throw UsageError("context must start with a system message");
  }
  const std::string key = resolve_api_key(config);

  HttpRequest request;
  request.url = join_url(config.base_url, "/chat/completions");
  request.headers = {{"Authorization", "Bearer " + key}, {"Content-Type", "application/json"}};
  request.body = dump_json(build_chat_request(messages, config));
  request.timeout = config.request_timeout;

  const auto start = std::chrono::steady_clock::now();
  int retries = 0;
  const HttpResponse http =
      post_with_retries(*transport_, request, config.max_retries, config.initial_backoff, sleeper_, &retries);
  if (http.status == 401 || http.status == 403) {
    throw AuthError("endpoint rejected the API key (HTTP " + std::to_string(http.status) + ")");
  }
  if (http.status < 200 || http.status >= 300) {
    throw ProviderError(http.status, http.body);
  }
  ModelResponse response = parse_chat_response(http.body);
  response.latency = Seconds(std::chrono::steady_clock::now() - start).count();
  response.retries = retries;
  return response;
}

}  // namespace visloop
