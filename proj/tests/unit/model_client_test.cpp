#include <cstdlib>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>
#include <visloop/errors.hpp>
#include <visloop/model_client.hpp>

namespace visloop {
namespace {

using nlohmann::json;

class FakeTransport : public HttpTransport {
 public:
  std::vector<HttpRequest> requests;
  // Each entry is a status code; 0 means "throw TransportError".
  std::vector<int> statuses;
  std::string ok_body = R"({"choices":[{"message":{"content":"hello"}}],"usage":{"prompt_tokens":3,"completion_tokens":1}})";

  HttpResponse post(const HttpRequest& request) override {
    requests.push_back(request);
    const int status = requests.size() <= statuses.size() ? statuses[requests.size() - 1] : 200;
    if (status == 0) throw TransportError("connection refused");
    return {status, status == 200 ? ok_body : "{\"error\":\"nope\"}"};
  }
};

class EnvKey {
 public:
  EnvKey(const char* name, const char* value) : name_(name) { ::setenv(name, value, 1); }
  ~EnvKey() { ::unsetenv(name_); }

 private:
  const char* name_;
};

std::vector<Message> context() {
  return {Message::text(Role::System, "sys"),
          Message(Role::User, {ContentPart::image(ImageBlob::solid(1, 1, 255, 0, 0)), ContentPart::text("what?")})};
}

ClientConfig config() {
  ClientConfig c;
  c.api_key_env = "VISLOOP_TEST_KEY";
  c.base_url = "http://example.invalid/v1/";
  c.model_id = "m";
  c.temperature = 0.25;
  c.initial_backoff = Seconds{0.5};
  return c;
}

TEST(ModelClient, GoldenRequestBody) {
  ClientConfig c = config();
  c.max_tokens = 64;
  const auto img = ImageBlob::solid(1, 1, 255, 0, 0);
  const json expected = {
      {"model", "m"},
      {"temperature", 0.25},
      {"max_tokens", 64},
      {"messages",
       {{{"role", "system"}, {"content", "sys"}},
        {{"role", "user"},
         {"content",
          {{{"type", "image_url"}, {"image_url", {{"url", "data:image/png;base64," + img.to_base64()}}}},
           {{"type", "text"}, {"text", "what?"}}}}}}}};
  EXPECT_EQ(build_chat_request(context(), c), expected);
}

TEST(ModelClient, ParseResponse) {
  const auto r = parse_chat_response(R"({"choices":[{"message":{"content":"hi"}}]})");
  EXPECT_EQ(r.text, "hi");
  EXPECT_FALSE(r.usage);
  EXPECT_EQ(parse_chat_response(R"({"choices":[{"message":{"content":[{"type":"text","text":"a"},{"type":"text","text":"b"}]}}]})")
                .text,
            "ab");
  EXPECT_THROW(parse_chat_response(R"({"choices":[{"message":{"content":""}}]})"), EmptyResponse);
  EXPECT_THROW(parse_chat_response(R"({"choices":[]})"), ProviderError);
  EXPECT_THROW(parse_chat_response("<html>"), ProviderError);
}

TEST(ModelClient, ApiKeyComesFromEnvironmentOnly) {
  ::unsetenv("VISLOOP_TEST_KEY");
  auto transport = std::make_shared<FakeTransport>();
  HttpChatClient client(transport, [](Seconds) {});
  EXPECT_THROW(client.complete(context(), config()), AuthError);
  EXPECT_TRUE(transport->requests.empty());

  EnvKey key("VISLOOP_TEST_KEY", "sk-test");
  const auto r = client.complete(context(), config());
  EXPECT_EQ(r.text, "hello");
  ASSERT_TRUE(r.usage);
  EXPECT_EQ(r.usage->prompt_tokens, 3);
  ASSERT_EQ(transport->requests.size(), 1u);
  EXPECT_EQ(transport->requests[0].url, "http://example.invalid/v1/chat/completions");
  bool saw_auth = false;
  for (const auto& [k, v] : transport->requests[0].headers) saw_auth |= k == "Authorization" && v == "Bearer sk-test";
  EXPECT_TRUE(saw_auth);
}

TEST(ModelClient, RetriesTransientFailuresWithBackoff) {
  EnvKey key("VISLOOP_TEST_KEY", "k");
  auto transport = std::make_shared<FakeTransport>();
  transport->statuses = {429, 0, 503};
  std::vector<double> sleeps;
  HttpChatClient client(transport, [&](Seconds s) { sleeps.push_back(s.count()); });
  const auto r = client.complete(context(), config());
  EXPECT_EQ(r.retries, 3);
  EXPECT_EQ(sleeps, (std::vector<double>{0.5, 1.0, 2.0}));
}

TEST(ModelClient, GivesUpAfterMaxRetries) {
  EnvKey key("VISLOOP_TEST_KEY", "k");
  auto transport = std::make_shared<FakeTransport>();
  transport->statuses = {500, 500, 500, 500, 500};
  HttpChatClient client(transport, [](Seconds) {});
  try {
    client.complete(context(), config());
    FAIL() << "expected ProviderError";
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.status(), 500);
  }
  EXPECT_EQ(transport->requests.size(), 4u);

  auto dead = std::make_shared<FakeTransport>();
  dead->statuses = {0, 0, 0, 0};
  HttpChatClient dead_client(dead, [](Seconds) {});
  EXPECT_THROW(dead_client.complete(context(), config()), TransportError);
}

TEST(ModelClient, ClientErrorsAreNotRetried) {
  EnvKey key("VISLOOP_TEST_KEY", "k");
  auto transport = std::make_shared<FakeTransport>();
  transport->statuses = {401};
  HttpChatClient client(transport, [](Seconds) {});
  EXPECT_THROW(client.complete(context(), config()), AuthError);
  transport->requests.clear();
  transport->statuses = {400};
  EXPECT_THROW(client.complete(context(), config()), ProviderError);
  EXPECT_EQ(transport->requests.size(), 1u);
}

TEST(ModelClient, ContextMustStartWithSystem) {
  EnvKey key("VISLOOP_TEST_KEY", "k");
  HttpChatClient client(std::make_shared<FakeTransport>(), [](Seconds) {});
  EXPECT_THROW(client.complete({Message::text(Role::User, "x")}, config()), UsageError);
}

TEST(ModelClient, ConfigValidation) {
  ClientConfig c = config();
  c.max_retries = -1;
  EXPECT_THROW(c.validate(), UsageError);
  c = config();
  c.base_url = "";
  EXPECT_THROW(c.validate(), UsageError);
}

TEST(ScriptedClient, ServesRepliesInOrder) {
  EXPECT_THROW(ScriptedClient({}), UsageError);
  auto client = scripted_client({"a", "b"});
  EXPECT_EQ(client->complete(context(), config()).text, "a");
  EXPECT_EQ(client->complete(context(), config()).text, "b");
  EXPECT_THROW(client->complete(context(), config()), ScriptExhausted);
  EXPECT_EQ(client->calls(), 2u);
}

// The default transport against a local server.
TEST(HttpTransport, TalksToLocalServer) {
  httplib::Server server;
  json seen;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    if (req.get_header_value("Authorization") != "Bearer local") {
      res.status = 401;
      return;
    }
    res.set_content(R"({"choices":[{"message":{"content":"from server"}}]})", "application/json");
  });
  server.Post("/v1/broken", [](const httplib::Request&, httplib::Response& res) {
    res.status = 502;
    res.set_content("bad gateway", "text/plain");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  EnvKey key("VISLOOP_TEST_KEY", "local");
  ClientConfig c = config();
  c.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  HttpChatClient client;
  EXPECT_EQ(client.complete(context(), c).text, "from server");
  EXPECT_EQ(seen["model"], "m");

  auto transport = make_default_transport();
  HttpRequest req;
  req.url = "http://127.0.0.1:" + std::to_string(port) + "/v1/broken";
  req.body = "{}";
  req.timeout = Seconds{5};
  const auto res = transport->post(req);
  EXPECT_EQ(res.status, 502);
  EXPECT_EQ(res.body, "bad gateway");

  server.stop();
  thread.join();

  req.url = "http://127.0.0.1:" + std::to_string(port) + "/v1/broken";
  EXPECT_THROW(transport->post(req), TransportError);
}

}  // namespace
}  // namespace visloop
