#include <cstdlib>
#include <iostream>

#include <spdlog/spdlog.h>
#include <visloop/agent.hpp>
#include <visloop/errors.hpp>
#include <visloop/trace_io.hpp>

#include "commands.hpp"

namespace visloop::cli {

namespace fs = std::filesystem;

int cmd_run(const CliConfig& cfg, const RunArgs& args) {
  if (args.query.empty()) throw UsageError("--query must not be empty");
  if (args.mode != "agent" && args.mode != "cot") throw UsageError("--mode must be agent or cot");
  std::vector<ImageBlob> images;
  for (const auto& path : args.images) {
    if (!fs::is_regular_file(path)) throw UsageError("image not found: " + path.string());
    try {
      images.push_back(ImageBlob::from_file(path));
    } catch (const Error& e) {
      throw UsageError(path.string() + ": " + e.what());
    }
  }
  if (cfg.mock_model.empty() && !std::getenv(cfg.api_key_env.c_str())) {
    spdlog::error("environment variable {} is not set; pass --mock-model for an offline run", cfg.api_key_env);
    return kExitConfig;
  }
  echo_config(cfg, "run");

  SessionOptions options;
  options.client = cfg.client();
  options.trace_id = args.trace_id;
  options.benchmark_id = "cli";
  options.extra_config = cfg.to_json();
  if (args.template_file) {
    const auto id = args.mode == "agent" ? TemplateId::AgentSystem : TemplateId::CotBaseline;
    (args.mode == "agent" ? options.agent_template : options.cot_template) =
        PromptTemplate::from_file(id, *args.template_file);
  }
  auto client = make_client(cfg, args.trace_id);
  const SessionResult result = args.mode == "agent"
                                   ? run_session(args.query, images, cfg.session(), *client,
                                                 supervisor_factory(cfg.supervisor()), options)
                                   : run_cot(args.query, images, cfg.session(), *client, options);

  const fs::path trace_path = cfg.output_dir / (args.trace_id + ".json");
  TraceWriteOptions format;
  format.include_timing = cfg.include_timing;
  write_trace_file(trace_path, result.trace, format);

  std::cout << "answer: " << result.answer.value_or("(none)") << "\n"
            << "termination: " << to_string(result.trace.termination) << "\n"
            << "turns: " << result.n_turns << ", code blocks: " << result.n_code_blocks << "\n";
  for (const auto& fault : result.faults) {
    std::cout << "fault: " << fault.kind << ": " << fault.message << "\n";
  }
  std::cout << "trace: " << trace_path.string() << std::endl;

  switch (result.trace.termination) {
    case Termination::Answered: return kExitOk;
    case Termination::MaxTurnsExceeded: return kExitMaxTurns;
    default: return kExitFailure;
  }
}

}  // namespace visloop::cli
