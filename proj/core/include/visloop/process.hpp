#pragma once

#include <sys/types.h>

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "visloop/session.hpp"

namespace visloop {

using Clock = std::chrono::steady_clock;

// A child process whose stdin and stdout are both connected to one end of a
// Unix socket pair, read and written line by line. Owning: the destructor
// kills and reaps the child if it is still around.
class ChildProcess {
 public:
  enum class ReadStatus { Line, Timeout, Eof };

  struct ReadOutcome {
    ReadStatus status;
    std::string line;
  };

  // Throws SpawnError when the program cannot be executed.
  static ChildProcess spawn(const std::vector<std::string>& argv,
                            const std::optional<std::filesystem::path>& working_dir = std::nullopt,
                            bool forward_stderr = false);

  ChildProcess(ChildProcess&& other) noexcept;
  ChildProcess& operator=(ChildProcess&& other) noexcept;
  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;
  ~ChildProcess();

  pid_t pid() const noexcept { return pid_; }

  // False once the peer has gone away.
  bool write_line(std::string_view line);
  ReadOutcome read_line(Clock::time_point deadline);

  // Reaps the child if it has exited; never blocks.
  bool poll_exit();
  // Waits up to `grace` for a voluntary exit, then sends SIGKILL and reaps.
  void stop(Seconds grace);
  void kill_now() { stop(Seconds{0}); }

  bool exited() const noexcept { return exit_status_.has_value(); }
  // Human-readable exit description ("exit code 3", "signal 9 (Killed)").
  std::string describe_exit() const;

 private:
  ChildProcess(pid_t pid, int fd) : pid_(pid), fd_(fd) {}
  void release() noexcept;

  pid_t pid_ = -1;
  int fd_ = -1;
  std::string buffer_;
  std::optional<int> exit_status_;
};

// SIGINT/SIGTERM handling for processes hosting kernels: a watcher thread
// sends SIGTERM to every live child, escalates to SIGKILL after `grace`, and
// exits with 128+signal. Call once from main before starting worker threads.
void install_child_cleanup_on_signals(Seconds grace = Seconds{1.0});

std::size_t live_child_count();

}  // namespace visloop
