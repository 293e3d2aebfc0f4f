#include <iostream>

#include <spdlog/spdlog.h>
#include <visloop/agent.hpp>
#include <visloop/errors.hpp>
#include <visloop/trace_io.hpp>

#include "commands.hpp"

namespace visloop::cli {

namespace {

// First difference between two traces in what the kernel produced, or empty.
std::string divergence(const SessionTrace& a, const SessionTrace& b) {
  if (a.turns.size() != b.turns.size()) {
    return "turn count " + std::to_string(a.turns.size()) + " vs " + std::to_string(b.turns.size());
  }
  for (std::size_t t = 0; t < a.turns.size(); ++t) {
    const auto& x = a.turns[t];
    const auto& y = b.turns[t];
    if (x.exec_results.size() != y.exec_results.size()) {
      return "turn " + std::to_string(t) + ": result count differs";
    }
    for (std::size_t i = 0; i < x.exec_results.size(); ++i) {
      const auto& r = x.exec_results[i];
      const auto& s = y.exec_results[i];
      const std::string where = "turn " + std::to_string(t) + ", block " + std::to_string(i) + ": ";
      if (r.status != s.status) {
        return where + "status " + std::string(to_string(r.status)) + " vs " + std::string(to_string(s.status));
      }
      if (r.stdout_text != s.stdout_text) return where + "stdout differs";
      if (r.images.size() != s.images.size()) return where + "image count differs";
    }
  }
  if (a.final_answer != b.final_answer) return "final answer differs";
  return {};
}

}  // namespace

int cmd_replay(const CliConfig& cfg, const ReplayArgs& args) {
  SessionTrace original;
  try {
    original = read_trace_file(args.trace);
  } catch (const Error& e) {
    spdlog::error("{}: {}", args.trace.string(), e.what());
    return kExitData;
  }
  echo_config(cfg, "replay");

  std::vector<std::string> script;
  for (const auto& turn : original.turns) script.push_back(turn.model_text);
  auto client = scripted_client(script);

  SessionConfig session = cfg.session();
  const auto& recorded = original.effective_config;
  if (recorded.is_object()) {
    session.max_turns = recorded.value("max_turns", session.max_turns);
    session.exec_timeout = Seconds{recorded.value("exec_timeout", session.exec_timeout.count())};
  }
  SessionOptions options;
  options.client = cfg.client();
  options.trace_id = original.trace_id + "-replay";
  options.benchmark_id = original.benchmark_id;
  options.extra_config = cfg.to_json();
  const bool cot = recorded.is_object() && recorded.value("mode", "agent") == "cot";
  const SessionResult replayed =
      cot ? run_cot(original.query, original.images, session, *client, options)
          : run_session(original.query, original.images, session, *client, supervisor_factory(cfg.supervisor()),
                        options);

  const auto out = cfg.output_dir / (options.trace_id + ".json");
  TraceWriteOptions format;
  format.include_timing = cfg.include_timing;
  write_trace_file(out, replayed.trace, format);

  const std::string diff = divergence(original, replayed.trace);
  std::cout << (diff.empty() ? "replay matches the recorded trace" : "replay diverged: " + diff) << "\n"
            << "trace: " << out.string() << std::endl;
  return diff.empty() ? kExitOk : kExitFailure;
}

}  // namespace visloop::cli
