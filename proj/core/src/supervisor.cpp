#include "visloop/supervisor.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>

#include "visloop/errors.hpp"

namespace visloop {
namespace {

Seconds since(Clock::time_point start) { return Clock::now() - start; }

Clock::time_point deadline_after(Seconds span) {
  return Clock::now() + std::chrono::duration_cast<Clock::duration>(span);
}

ExecStatus status_from_wire(const std::string& status) {
  if (status == "ok") return ExecStatus::Ok;
  if (status == "error") return ExecStatus::Error;
  return ExecStatus::Timeout;
}

std::string seconds_text(Seconds s) {
  std::string text = std::to_string(s.count());
  while (text.size() > 1 && text.back() == '0') {
    text.pop_back();
  }
  if (text.back() == '.') {
    text.pop_back();
  }
  return text;
}

}  // namespace

std::string_view to_string(ResultOrigin origin) {
  switch (origin) {
    case ResultOrigin::Kernel:
      return "kernel";
    case ResultOrigin::SynthesizedTimeout:
      return "synthesized_timeout";
    case ResultOrigin::SynthesizedCrash:
      return "synthesized_crash";
    case ResultOrigin::ProtocolViolation:
      return "protocol_violation";
  }
  return "unknown";
}

void SupervisorConfig::validate() const {
  if (command.empty() || command.front().empty()) {
    throw UsageError("kernel command is empty");
  }
  if (startup_timeout <= Seconds::zero()) {
    throw UsageError("startup_timeout must be positive");
  }
  if (shutdown_grace < Seconds::zero()) {
    throw UsageError("shutdown_grace must not be negative");
  }
}

KernelSupervisor::KernelSupervisor(SupervisorConfig config) : config_(std::move(config)) {}

KernelSupervisor::~KernelSupervisor() { shutdown(); }

std::unique_ptr<KernelSupervisor> KernelSupervisor::spawn(SupervisorConfig config) {
  config.validate();
  std::unique_ptr<KernelSupervisor> sup(new KernelSupervisor(std::move(config)));
  sup->start_child();
  return sup;
}

void KernelSupervisor::start_child() {
  child_.reset();
  initialized_ = false;
  images_injected_ = 0;
  ChildProcess child = ChildProcess::spawn(config_.command, config_.working_dir, config_.forward_stderr);
  auto outcome = child.read_line(deadline_after(config_.startup_timeout));
  if (outcome.status == ChildProcess::ReadStatus::Timeout) {
    child.kill_now();
    throw HandshakeTimeout("kernel sent no ready frame within " + seconds_text(config_.startup_timeout) + " s");
  }
  if (outcome.status == ChildProcess::ReadStatus::Eof) {
    child.stop(config_.shutdown_grace);
    throw SpawnError("kernel closed its channel before the handshake (" + child.describe_exit() + ")");
  }
  protocol::Frame ready;
  try {
    ready = protocol::decode(outcome.line);
  } catch (const ProtocolError& e) {
    child.kill_now();
    throw SpawnError(std::string("bad handshake: ") + e.what());
  }
  if (ready.kind != protocol::FrameKind::Ready) {
    child.kill_now();
    throw SpawnError("bad handshake: expected a ready frame, got '" +
                     std::string(protocol::to_string(ready.kind)) + "'");
  }
  if (ready.protocol_version != protocol::kVersion) {
    child.kill_now();
    throw SpawnError("kernel speaks protocol version " + std::to_string(ready.protocol_version) +
                     ", expected " + std::to_string(protocol::kVersion));
  }
  kernel_meta_ = ready.meta;
  child_.emplace(std::move(child));
  spdlog::debug("kernel pid {} ready (generation {})", child_->pid(), generation_);
}

pid_t KernelSupervisor::pid() const noexcept { return child_ ? child_->pid() : -1; }

bool KernelSupervisor::alive() { return child_.has_value() && !child_->poll_exit(); }

std::size_t KernelSupervisor::exec_frames_sent() const noexcept {
  return static_cast<std::size_t>(std::count_if(exchanges_.begin(), exchanges_.end(), [](const Exchange& e) {
    return e.request == protocol::FrameKind::Exec;
  }));
}

void KernelSupervisor::drop_child(Seconds grace) {
  if (child_) {
    child_->stop(grace);
    child_.reset();
  }
}

void KernelSupervisor::restart() {
  drop_child(Seconds{0});
  ++generation_;
  start_child();
  if (init_requested_) {
    send_init();
  }
}

std::string KernelSupervisor::recover() {
  if (config_.restart_policy == RestartPolicy::FailSession) {
    drop_child(Seconds{0});
    return "The interpreter was not restarted.";
  }
  try {
    restart();
  } catch (const Error& e) {
    drop_child(Seconds{0});
    spdlog::warn("kernel restart failed: {}", e.what());
    return std::string("Restarting the interpreter failed: ") + e.what();
  }
  std::string note =
      "The interpreter was restarted and its state was lost: variables, imports and definitions from earlier "
      "snippets no longer exist.";
  if (images_injected_ > 0) {
    note += " image_clue_0";
    if (images_injected_ > 1) {
      note += " .. image_clue_" + std::to_string(images_injected_ - 1);
    }
    note += " were loaded again.";
  }
  return note;
}

void KernelSupervisor::protocol_violation(std::size_t exchange, const std::string& what) {
  exchanges_[exchange].origin = ResultOrigin::ProtocolViolation;
  exchanges_[exchange].status = ExecStatus::KernelCrashed;
  spdlog::error("kernel protocol violation on frame {}: {}", exchanges_[exchange].id, what);
  drop_child(Seconds{0});
  throw ProtocolError(what);
}

KernelSupervisor::Wait KernelSupervisor::transact(const protocol::Frame& request, Clock::time_point deadline,
                                                  protocol::Frame& out) {
  exchanges_.push_back({request.id, request.kind, generation_, ResultOrigin::Kernel, ExecStatus::Ok});
  const std::size_t slot = exchanges_.size() - 1;
  if (!child_->write_line(protocol::encode(request))) {
    return Wait::Closed;
  }
  auto outcome = child_->read_line(deadline);
  switch (outcome.status) {
    case ChildProcess::ReadStatus::Timeout:
      return Wait::TimedOut;
    case ChildProcess::ReadStatus::Eof:
      return Wait::Closed;
    case ChildProcess::ReadStatus::Line:
      break;
  }
  try {
    out = protocol::decode(outcome.line);
  } catch (const ProtocolError& e) {
    protocol_violation(slot, e.what());
  }
  if (out.kind != protocol::FrameKind::Result) {
    protocol_violation(slot, "expected a result frame for id " + std::to_string(request.id) + ", got '" +
                                 std::string(protocol::to_string(out.kind)) + "'");
  }
  if (out.id != request.id) {
    protocol_violation(slot, "result id " + std::to_string(out.id) + " does not answer request " +
                                 std::to_string(request.id));
  }
  exchanges_[slot].status = status_from_wire(out.status);
  return Wait::Answered;
}

void KernelSupervisor::send_init() {
  const auto request = protocol::init(next_id_++, [&] {
    std::vector<std::string> encoded;
    encoded.reserve(images_.size());
    for (const auto& image : images_) {
      encoded.push_back(image.to_base64());
    }
    return encoded;
  }());
  protocol::Frame reply;
  const Wait wait = transact(request, deadline_after(config_.startup_timeout), reply);
  if (wait != Wait::Answered) {
    exchanges_.back().origin =
        wait == Wait::TimedOut ? ResultOrigin::SynthesizedTimeout : ResultOrigin::SynthesizedCrash;
    exchanges_.back().status = wait == Wait::TimedOut ? ExecStatus::Timeout : ExecStatus::KernelCrashed;
    drop_child(config_.shutdown_grace);
    throw KernelCrashed(wait == Wait::TimedOut ? "kernel did not acknowledge the images"
                                               : "kernel exited while loading the images");
  }
  if (reply.status != "ok") {
    throw KernelCrashed("kernel rejected the images: " + reply.error);
  }
  initialized_ = true;
  images_injected_ = images_.size();
}

void KernelSupervisor::init_images(const std::vector<ImageBlob>& images) {
  if (shut_down_) {
    throw UsageError("kernel has been shut down");
  }
  if (initialized_) {
    throw UsageError("images were already injected in generation " + std::to_string(generation_));
  }
  if (!alive()) {
    throw KernelCrashed("kernel is not running");
  }
  images_ = images;
  init_requested_ = true;
  send_init();
}

ExecResult KernelSupervisor::exec(const std::string& code, Seconds timeout) {
  if (shut_down_) {
    throw UsageError("kernel has been shut down");
  }
  if (timeout <= Seconds::zero()) {
    throw UsageError("exec timeout must be positive");
  }
  if (!alive()) {
    if (config_.restart_policy == RestartPolicy::FailSession) {
      throw KernelCrashed("kernel is not running" + (child_ ? " (" + child_->describe_exit() + ")" : std::string()));
    }
    restart();
  }

  const auto start = Clock::now();
  protocol::Frame reply;
  const Wait wait = transact(protocol::exec(next_id_++, code), start + std::chrono::duration_cast<Clock::duration>(timeout), reply);
  ExecResult result;
  if (wait == Wait::TimedOut) {
    exchanges_.back().origin = ResultOrigin::SynthesizedTimeout;
    exchanges_.back().status = ExecStatus::Timeout;
    result.status = ExecStatus::Timeout;
    result.wall_time = since(start).count();
    result.error = "Execution exceeded the " + seconds_text(timeout) + " s time limit and the kernel was killed. " +
                   recover();
    return result;
  }
  if (wait == Wait::Closed) {
    // Give the child a moment to finish dying so the exit reason is known.
    child_->stop(std::min(config_.shutdown_grace, Seconds{0.5}));
    const std::string how = child_->describe_exit();
    exchanges_.back().origin = ResultOrigin::SynthesizedCrash;
    exchanges_.back().status = ExecStatus::KernelCrashed;
    result.status = ExecStatus::KernelCrashed;
    result.wall_time = since(start).count();
    result.error = "The kernel process died while executing this snippet (" + how + "). " + recover();
    return result;
  }

  result.status = status_from_wire(reply.status);
  result.stdout_text = std::move(reply.stdout_text);
  if (result.status == ExecStatus::Ok) {
    result.warnings = std::move(reply.error);
  } else {
    result.error = std::move(reply.error);
  }
  const std::size_t slot = exchanges_.size() - 1;
  for (std::size_t i = 0; i < reply.images.size(); ++i) {
    try {
      result.images.push_back(ImageBlob::from_base64(reply.images[i]));
    } catch (const Error& e) {
      protocol_violation(slot, "result image " + std::to_string(i) + " is not a PNG: " + e.what());
    }
  }
  result.wall_time = since(start).count();
  return result;
}

void KernelSupervisor::shutdown() noexcept {
  if (shut_down_) {
    return;
  }
  shut_down_ = true;
  try {
    if (child_ && !child_->poll_exit()) {
      child_->write_line(protocol::encode(protocol::shutdown(next_id_++)));
    }
    drop_child(config_.shutdown_grace);
  } catch (...) {
  }
}

std::unique_ptr<KernelSupervisor> spawn_kernel(SupervisorConfig config) {
  return KernelSupervisor::spawn(std::move(config));
}

KernelFactory supervisor_factory(SupervisorConfig config) {
  config.validate();
  return [config]() -> std::unique_ptr<Kernel> { return KernelSupervisor::spawn(config); };
}

std::vector<std::string> mock_kernel_command(const std::filesystem::path& binary, std::vector<std::string> extra) {
  std::vector<std::string> argv{binary.string()};
  argv.insert(argv.end(), std::make_move_iterator(extra.begin()), std::make_move_iterator(extra.end()));
  return argv;
}

}  // namespace visloop
