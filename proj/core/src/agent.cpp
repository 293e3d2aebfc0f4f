#include "visloop/agent.hpp"

#include <spdlog/spdlog.h>

#include "visloop/errors.hpp"
#include "visloop/tags.hpp"

namespace visloop {

const std::string_view kNudgeMessage =
    "Your last reply contained neither a <code> block nor an <answer> tag. Either write Python code inside "
    "<code></code> to continue the analysis, or give the final answer as <answer>\\boxed{...}</answer>.";

namespace {

ClientConfig effective_client(const SessionConfig& config, const SessionOptions& options) {
  ClientConfig client = options.client;
  if (!config.model_id.empty()) {
    client.model_id = config.model_id;
  }
  client.temperature = config.temperature;
  return client;
}

nlohmann::json effective_config(const SessionConfig& config, const ClientConfig& client, std::string_view mode,
                                const SessionOptions& options) {
  nlohmann::json doc = config.to_json();
  doc["mode"] = mode;
  doc["model_id"] = client.model_id;
  doc["base_url"] = client.base_url;
  doc["max_retries"] = client.max_retries;
  if (client.max_tokens) {
    doc["max_tokens"] = *client.max_tokens;
  }
  if (options.extra_config.is_object()) {
    for (const auto& [key, value] : options.extra_config.items()) {
      doc[key] = value;
    }
  }
  return doc;
}

std::vector<ImageSize> sizes_of(const std::vector<ImageBlob>& images) {
  std::vector<ImageSize> sizes;
  sizes.reserve(images.size());
  for (const auto& image : images) {
    sizes.push_back({image.width(), image.height()});
  }
  return sizes;
}

SessionResult finish(SessionTrace trace) {
  SessionResult result;
  result.answer = trace.final_answer;
  result.n_turns = trace.turns.size();
  result.n_code_blocks = trace.total_code_blocks();
  result.faults = trace.faults;
  trace.validate();
  result.trace = std::move(trace);
  return result;
}

ExecResult lost_result(std::string error) {
  ExecResult r;
  r.status = ExecStatus::KernelCrashed;
  r.error = std::move(error);
  return r;
}

// Owns the lazily created kernel for one session.
class KernelSlot {
 public:
  KernelSlot(const KernelFactory& factory, const std::vector<ImageBlob>& images)
      : factory_(factory), images_(images) {}
  ~KernelSlot() {
    if (kernel_) {
      kernel_->shutdown();
    }
  }

  // Spawns on first use, retrying once. Throws the last spawn error.
  Kernel& get() {
    if (kernel_) {
      return *kernel_;
    }
    for (int attempt = 0;; ++attempt) {
      try {
        auto kernel = factory_();
        if (!kernel) {
          throw SpawnError("kernel factory returned nothing");
        }
        kernel->init_images(images_);
        kernel_ = std::move(kernel);
        return *kernel_;
      } catch (const Error& e) {
        spdlog::warn("kernel start attempt {} failed: {}", attempt + 1, e.what());
        if (attempt >= 1) {
          throw;
        }
      }
    }
  }

 private:
  const KernelFactory& factory_;
  const std::vector<ImageBlob>& images_;
  std::unique_ptr<Kernel> kernel_;
};

}  // namespace

std::vector<Message> initial_context(const std::string& system_prompt, const std::string& query,
                                     const std::vector<ImageBlob>& images) {
  std::vector<Message> messages;
  messages.push_back(Message::text(Role::System, system_prompt));
  std::vector<ContentPart> parts;
  for (const auto& image : images) {
    parts.push_back(ContentPart::image(image));
  }
  parts.push_back(ContentPart::text(query));
  messages.emplace_back(Role::User, std::move(parts));
  return messages;
}

Message clue_message(const std::vector<ExecResult>& results) {
  std::vector<ContentPart> parts;
  for (const auto& result : results) {
    parts.push_back(ContentPart::text(wrap_interpreter(result)));
    for (const auto& image : result.images) {
      parts.push_back(ContentPart::image(image));
    }
  }
  if (parts.empty()) {
    parts.push_back(ContentPart::text("<interpreter></interpreter>"));
  }
  return Message(Role::User, std::move(parts));
}

SessionResult run_session(const std::string& query, const std::vector<ImageBlob>& images,
                          const SessionConfig& config, ChatClient& client, const KernelFactory& kernels,
                          const SessionOptions& options) {
  config.validate();
  if (!kernels) {
    throw UsageError("no kernel factory given");
  }
  const ClientConfig client_config = effective_client(config, options);
  const auto sizes = sizes_of(images);
  const std::string system_prompt =
      options.agent_template ? render_agent_prompt(sizes, query, *options.agent_template)
                             : render_agent_prompt(sizes, query);

  SessionTrace trace;
  trace.trace_id = options.trace_id;
  trace.benchmark_id = options.benchmark_id;
  trace.query = query;
  trace.images = images;
  trace.effective_config = effective_config(config, client_config, "agent", options);

  std::vector<Message> messages = initial_context(system_prompt, query, images);
  KernelSlot kernel(kernels, images);
  bool nudged = false;
  bool done = false;

  for (std::size_t index = 0; index < config.max_turns && !done; ++index) {
    ModelResponse response;
    try {
      response = client.complete(messages, client_config);
    } catch (const Error& e) {
      trace.faults.push_back({index, "model", e.what()});
      trace.termination = Termination::Fault;
      done = true;
      break;
    }

    Turn turn;
    turn.index = index;
    turn.model_text = response.text;
    messages.push_back(Message::text(Role::Assistant, response.text));
    ModelAction action = classify(response.text);
    turn.warnings = action.warnings;

    switch (action.kind) {
      case ModelAction::Kind::FinalAnswer:
        trace.final_answer = action.answer;
        trace.termination = Termination::Answered;
        done = true;
        break;

      case ModelAction::Kind::Neither:
        if (!nudged) {
          nudged = true;
          messages.push_back(Message::text(Role::User, std::string(kNudgeMessage)));
          turn.warnings.push_back("reply had neither code nor answer; nudge sent");
        } else {
          turn.warnings.push_back("reply had neither code nor answer");
        }
        break;

      case ModelAction::Kind::RunCode: {
        Kernel* k = nullptr;
        try {
          k = &kernel.get();
        } catch (const Error& e) {
          trace.faults.push_back({index, "kernel_spawn", e.what()});
          trace.termination = Termination::Fault;
          done = true;
          break;
        }
        turn.code_blocks = action.code_blocks;
        for (const auto& block : turn.code_blocks) {
          if (done) {
            turn.exec_results.push_back(lost_result("Not executed: the session was aborted by an earlier failure."));
            continue;
          }
          try {
            ExecResult result = k->exec(block, config.exec_timeout);
            const bool lost = result.status == ExecStatus::Timeout || result.status == ExecStatus::KernelCrashed;
            if (lost && config.kernel_restart_policy == RestartPolicy::FailSession) {
              trace.faults.push_back({index, "kernel_lost", result.error});
              trace.termination = Termination::Fault;
              done = true;
            }
            turn.exec_results.push_back(std::move(result));
          } catch (const Error& e) {
            turn.exec_results.push_back(lost_result(e.what()));
            trace.faults.push_back({index, "kernel", e.what()});
            trace.termination = Termination::Fault;
            done = true;
          }
        }
        Message clue = clue_message(turn.exec_results);
        messages.push_back(clue);
        turn.clue_message = std::move(clue);
        break;
      }
    }
    trace.turns.push_back(std::move(turn));
  }

  if (!done) {
    trace.termination = Termination::MaxTurnsExceeded;
  }
  return finish(std::move(trace));
}

SessionResult run_cot(const std::string& query, const std::vector<ImageBlob>& images, const SessionConfig& config,
                      ChatClient& client, const SessionOptions& options) {
  config.validate();
  const ClientConfig client_config = effective_client(config, options);
  const std::string prompt =
      options.cot_template ? render_cot_prompt(query, *options.cot_template) : render_cot_prompt(query);

  SessionTrace trace;
  trace.trace_id = options.trace_id;
  trace.benchmark_id = options.benchmark_id;
  trace.query = query;
  trace.images = images;
  trace.effective_config = effective_config(config, client_config, "cot", options);

  const std::vector<Message> messages = initial_context(prompt, query, images);
  try {
    ModelResponse response = client.complete(messages, client_config);
    Turn turn;
    turn.index = 0;
    turn.model_text = response.text;
    trace.final_answer = extract_boxed(response.text);
    trace.termination = trace.final_answer ? Termination::Answered : Termination::Unanswered;
    trace.turns.push_back(std::move(turn));
  } catch (const Error& e) {
    trace.faults.push_back({std::nullopt, "model", e.what()});
    trace.termination = Termination::Fault;
  }
  return finish(std::move(trace));
}

}  // namespace visloop
