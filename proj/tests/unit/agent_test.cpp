#include <gtest/gtest.h>
#include <visloop/agent.hpp>
#include <visloop/errors.hpp>
#include <visloop/trace_io.hpp>

#include "support.hpp"

namespace visloop {
namespace {

std::string code(const std::string& s) { return "<code>\n```python\n" + s + "\n```\n</code>"; }
std::string answer(const std::string& s) { return "<answer>\n\\boxed{" + s + "}\n</answer>"; }

KernelFactory mock_factory(std::vector<std::string> extra = {}) {
  SupervisorConfig c;
  c.command = testing::mock_command(std::move(extra));
  c.startup_timeout = Seconds{5};
  return supervisor_factory(c);
}

SessionConfig session_config() {
  SessionConfig c;
  c.max_turns = 5;
  c.exec_timeout = Seconds{5};
  c.model_id = "scripted";
  return c;
}

// Records every context it is handed.
class RecordingClient : public ChatClient {
 public:
  explicit RecordingClient(std::vector<std::string> script) : inner_(std::move(script)) {}
  ModelResponse complete(const std::vector<Message>& messages, const ClientConfig& config) override {
    contexts.push_back(messages);
    return inner_.complete(messages, config);
  }
  std::vector<std::vector<Message>> contexts;

 private:
  ScriptedClient inner_;
};

TEST(Agent, TwoCodeTurnsThenAnswer) {
  const auto img = ImageBlob::solid(30, 20, 200, 0, 0);
  RecordingClient client({
      "Look.\n" + code("w, h = image_clue_0.size\nprint(w, h)"),
      code("import matplotlib.pyplot as plt\nplt.imshow(image_clue_0.crop((0, 0, 10, 10)))\nplt.show()") +
          code("print(w * h)"),
      answer("600"),
  });
  const auto r = run_session("What is the area?", {img}, session_config(), client, mock_factory());
  EXPECT_EQ(r.trace.termination, Termination::Answered);
  EXPECT_EQ(r.answer, "600");
  EXPECT_EQ(r.n_turns, 3u);
  EXPECT_EQ(r.n_code_blocks, 3u);
  ASSERT_EQ(r.trace.turns.size(), 3u);
  EXPECT_EQ(r.trace.turns[0].exec_results[0].stdout_text, "30 20\n");
  const auto& clue = *r.trace.turns[1].clue_message;
  ASSERT_EQ(clue.parts().size(), 3u);
  EXPECT_TRUE(clue.parts()[0].is_text());
  EXPECT_TRUE(clue.parts()[1].is_image());
  EXPECT_EQ(clue.parts()[1].as_image().width(), 10u);
  EXPECT_EQ(clue.parts()[2].as_text(), "<interpreter>600\n</interpreter>");
  EXPECT_FALSE(r.trace.turns[2].clue_message);

  // Context growth: system, user, then assistant/clue pairs.
  ASSERT_EQ(client.contexts.size(), 3u);
  EXPECT_EQ(client.contexts[0].size(), 2u);
  EXPECT_EQ(client.contexts[2].size(), 6u);
  EXPECT_EQ(client.contexts[0][0].role(), Role::System);
  EXPECT_NE(client.contexts[0][0].joined_text().find("Image Width: 30; Image Height: 20"), std::string::npos);
  EXPECT_EQ(client.contexts[0][1].image_count(), 1u);
  EXPECT_EQ(client.contexts[2][4].role(), Role::Assistant);
  EXPECT_EQ(client.contexts[2][5].role(), Role::User);
  EXPECT_EQ(r.trace.effective_config["mode"], "agent");
}

TEST(Agent, DirectAnswerNeverStartsAKernel) {
  int spawned = 0;
  KernelFactory counting = [&]() -> std::unique_ptr<Kernel> {
    ++spawned;
    return nullptr;
  };
  auto client = scripted_client({answer("4")});
  const auto r = run_session("2+2?", {}, session_config(), *client, counting);
  EXPECT_EQ(r.answer, "4");
  EXPECT_EQ(spawned, 0);
}

TEST(Agent, NudgesOnceThenKeepsGoing) {
  RecordingClient client({"hmm", "still thinking", answer("x")});
  const auto r = run_session("q", {}, session_config(), client, mock_factory());
  EXPECT_EQ(r.trace.termination, Termination::Answered);
  ASSERT_EQ(client.contexts.size(), 3u);
  EXPECT_EQ(client.contexts[1].back().joined_text(), kNudgeMessage);
  EXPECT_EQ(client.contexts[2].back().role(), Role::Assistant);
  EXPECT_NE(r.trace.turns[0].warnings.back().find("nudge"), std::string::npos);
}

TEST(Agent, MaxTurns) {
  auto cfg = session_config();
  cfg.max_turns = 2;
  auto client = scripted_client({code("print(1)"), code("print(2)"), answer("late")});
  const auto r = run_session("q", {}, cfg, *client, mock_factory());
  EXPECT_EQ(r.trace.termination, Termination::MaxTurnsExceeded);
  EXPECT_FALSE(r.answer);
  EXPECT_EQ(r.n_turns, 2u);
}

TEST(Agent, ModelFailureIsAFault) {
  auto client = scripted_client({code("print(1)")});
  const auto r = run_session("q", {}, session_config(), *client, mock_factory());
  EXPECT_EQ(r.trace.termination, Termination::Fault);
  ASSERT_EQ(r.faults.size(), 1u);
  EXPECT_EQ(r.faults[0].kind, "model");
  EXPECT_EQ(r.faults[0].turn, 1u);
}

TEST(Agent, KernelSpawnFailureIsAFault) {
  SupervisorConfig bad;
  bad.command = {"/no/such/kernel"};
  auto client = scripted_client({code("print(1)"), answer("x")});
  const auto r = run_session("q", {}, session_config(), *client, supervisor_factory(bad));
  EXPECT_EQ(r.trace.termination, Termination::Fault);
  EXPECT_EQ(r.faults.at(0).kind, "kernel_spawn");
  EXPECT_NO_THROW(r.trace.validate());
}

TEST(Agent, CrashIsReportedToTheModelAndTheLoopContinues) {
  auto client = scripted_client({code("import os\nos._exit(3)") + code("print(image_clue_0.size)"), answer("ok")});
  const auto r = run_session("q", {ImageBlob::solid(2, 2, 0, 0, 0)}, session_config(), *client, mock_factory());
  EXPECT_EQ(r.trace.termination, Termination::Answered);
  const auto& results = r.trace.turns[0].exec_results;
  ASSERT_EQ(results.size(), 2u);
  EXPECT_EQ(results[0].status, ExecStatus::KernelCrashed);
  EXPECT_EQ(results[1].status, ExecStatus::Ok);
  EXPECT_EQ(results[1].stdout_text, "(2, 2)\n");
  EXPECT_NE(r.trace.turns[0].clue_message->joined_text().find("[kernel_crashed]"), std::string::npos);
}

TEST(Agent, FailSessionPolicyStopsAtFirstCrash) {
  auto cfg = session_config();
  cfg.kernel_restart_policy = RestartPolicy::FailSession;
  SupervisorConfig sc;
  sc.command = testing::mock_command({"--crash-on-exec", "1"});
  sc.restart_policy = RestartPolicy::FailSession;
  auto client = scripted_client({code("print(1)") + code("print(2)"), answer("ok")});
  const auto r = run_session("q", {}, cfg, *client, supervisor_factory(sc));
  EXPECT_EQ(r.trace.termination, Termination::Fault);
  const auto& results = r.trace.turns[0].exec_results;
  ASSERT_EQ(results.size(), 2u);
  EXPECT_NE(results[1].error.find("Not executed"), std::string::npos);
}

TEST(Agent, CotBaseline) {
  auto client = scripted_client({"It is \\boxed{B}."});
  const auto r = run_cot("Which?", {ImageBlob::solid(3, 3, 0, 0, 0)}, session_config(), *client);
  EXPECT_EQ(r.answer, "B");
  EXPECT_EQ(r.trace.effective_config["mode"], "cot");
  auto silent = scripted_client({"no idea"});
  EXPECT_EQ(run_cot("Which?", {}, session_config(), *silent).trace.termination, Termination::Unanswered);
}

TEST(Agent, InvalidArguments) {
  auto client = scripted_client({answer("x")});
  EXPECT_THROW(run_session("q", {}, session_config(), *client, KernelFactory{}), UsageError);
  auto cfg = session_config();
  cfg.max_turns = 0;
  EXPECT_THROW(run_session("q", {}, cfg, *client, mock_factory()), UsageError);
}

TEST(Agent, SessionsAreDeterministic) {
  std::string first;
  for (int i = 0; i < 2; ++i) {
    auto client = scripted_client({code("print(sum(range(10)))"), answer("45")});
    const auto r = run_session("q", {ImageBlob::solid(4, 4, 1, 2, 3)}, session_config(), *client, mock_factory());
    const std::string doc = serialize_trace(r.trace, {.include_timing = false});
    if (i == 0) first = doc;
    EXPECT_EQ(doc, first);
  }
}

}  // namespace
}  // namespace visloop
