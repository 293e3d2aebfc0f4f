#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "visloop/model_client.hpp"
#include "visloop/prompting.hpp"
#include "visloop/session.hpp"
#include "visloop/supervisor.hpp"

namespace visloop {

struct SessionResult {
  SessionTrace trace;
  std::optional<std::string> answer;
  // Model calls made, including the one that produced the answer.
  std::size_t n_turns = 0;
  std::size_t n_code_blocks = 0;
  std::vector<FaultRecord> faults;
};

struct SessionOptions {
  // Endpoint settings; model_id and temperature are taken from SessionConfig
  // when it sets them.
  ClientConfig client;
  std::string trace_id;
  std::string benchmark_id;
  std::optional<PromptTemplate> agent_template;
  std::optional<PromptTemplate> cot_template;
  // Merged into the trace's effective config (for example CLI settings).
  nlohmann::json extra_config = nlohmann::json::object();
};

// Text appended after a reply that has neither a code block nor an answer.
extern const std::string_view kNudgeMessage;

// The first two messages of every session: the rendered system prompt and a
// user message holding the input images followed by the query.
std::vector<Message> initial_context(const std::string& system_prompt, const std::string& query,
                                     const std::vector<ImageBlob>& images);

// The mm_clue fed back after running a turn's code: each result's
// interpreter text followed by the images it produced, in execution order.
Message clue_message(const std::vector<ExecResult>& results);

// Model/execute loop. The kernel is created through `kernels` on the first
// code action only. Faults end the session with Termination::Fault and are
// recorded in the trace; this function only throws UsageError for invalid
// arguments.
SessionResult run_session(const std::string& query, const std::vector<ImageBlob>& images,
                          const SessionConfig& config, ChatClient& client, const KernelFactory& kernels,
                          const SessionOptions& options = {});

// Single call with the baseline prompt; the answer is the last \boxed{}.
SessionResult run_cot(const std::string& query, const std::vector<ImageBlob>& images, const SessionConfig& config,
                      ChatClient& client, const SessionOptions& options = {});

}  // namespace visloop
