#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "visloop/process.hpp"
#include "visloop/protocol.hpp"
#include "visloop/session.hpp"

namespace visloop {

struct SupervisorConfig {
  // argv of the kernel program, e.g. {"python3", "-u", "-m", "visloop_kernel"}.
  std::vector<std::string> command;
  Seconds startup_timeout{30.0};
  Seconds shutdown_grace{2.0};
  std::optional<std::filesystem::path> working_dir;
  RestartPolicy restart_policy = RestartPolicy::RestartAndReport;
  // Pass the kernel's stderr through to ours instead of discarding it.
  bool forward_stderr = false;

  // Throws UsageError.
  void validate() const;
};

// What the agent loop needs from an execution backend.
class Kernel {
 public:
  virtual ~Kernel() = default;

  // Binds image_clue_0..k-1. Once per generation; restarts re-inject.
  virtual void init_images(const std::vector<ImageBlob>& images) = 0;
  virtual ExecResult exec(const std::string& code, Seconds timeout) = 0;
  // Idempotent, never throws.
  virtual void shutdown() noexcept = 0;
  virtual int generation() const noexcept = 0;
};

using KernelFactory = std::function<std::unique_ptr<Kernel>()>;

enum class ResultOrigin { Kernel, SynthesizedTimeout, SynthesizedCrash, ProtocolViolation };

std::string_view to_string(ResultOrigin origin);

// One request frame and how it was answered.
struct Exchange {
  std::uint64_t id = 0;
  protocol::FrameKind request = protocol::FrameKind::Exec;
  int generation = 0;
  ResultOrigin origin = ResultOrigin::Kernel;
  ExecStatus status = ExecStatus::Ok;
};

// Host side of one kernel: at most one live child at a time. Calls on one
// instance must be serialized by the caller.
class KernelSupervisor final : public Kernel {
 public:
  // Launches the kernel and waits for its ready frame. Throws SpawnError
  // (launch failure, early exit, version mismatch) or HandshakeTimeout.
  static std::unique_ptr<KernelSupervisor> spawn(SupervisorConfig config);

  ~KernelSupervisor() override;

  // Throws UsageError if already initialized this generation, KernelCrashed
  // if the kernel dies or rejects the images, ProtocolError on a bad reply.
  void init_images(const std::vector<ImageBlob>& images) override;

  // Timeouts and crashes come back as results (status Timeout/KernelCrashed)
  // after the kernel has been restarted, or left dead under FailSession.
  // Throws ProtocolError on a malformed or mismatched reply, KernelCrashed
  // when called on a dead kernel under FailSession, SpawnError when a pending
  // restart fails.
  ExecResult exec(const std::string& code, Seconds timeout) override;

  void shutdown() noexcept override;

  int generation() const noexcept override { return generation_; }
  pid_t pid() const noexcept;
  bool alive();
  std::size_t images_injected() const noexcept { return images_injected_; }
  const nlohmann::json& kernel_meta() const noexcept { return kernel_meta_; }
  const std::vector<Exchange>& exchanges() const noexcept { return exchanges_; }
  std::size_t exec_frames_sent() const noexcept;
  const SupervisorConfig& config() const noexcept { return config_; }

 private:
  explicit KernelSupervisor(SupervisorConfig config);

  enum class Wait { Answered, TimedOut, Closed };

  void start_child();
  void restart();
  // After a crash or timeout: restart if the policy allows. Returns the
  // sentence appended to the synthesized error text.
  std::string recover();
  void send_init();
  // Sends `request`, logs the exchange and waits for the matching result.
  Wait transact(const protocol::Frame& request, Clock::time_point deadline, protocol::Frame& out);
  [[noreturn]] void protocol_violation(std::size_t exchange, const std::string& what);
  void drop_child(Seconds grace);

  SupervisorConfig config_;
  std::optional<ChildProcess> child_;
  std::uint64_t next_id_ = 1;
  int generation_ = 0;
  bool initialized_ = false;
  bool init_requested_ = false;
  bool shut_down_ = false;
  std::vector<ImageBlob> images_;
  std::size_t images_injected_ = 0;
  nlohmann::json kernel_meta_;
  std::vector<Exchange> exchanges_;
};

std::unique_ptr<KernelSupervisor> spawn_kernel(SupervisorConfig config);

KernelFactory supervisor_factory(SupervisorConfig config);

// argv for the mock kernel, with `extra` fault flags appended.
std::vector<std::string> mock_kernel_command(const std::filesystem::path& binary,
                                             std::vector<std::string> extra = {});

}  // namespace visloop
