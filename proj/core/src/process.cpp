#include "visloop/process.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/prctl.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <mutex>
#include <set>
#include <thread>

#include "visloop/errors.hpp"

namespace visloop {
namespace {

std::mutex registry_mutex;
std::set<pid_t>& live_children() {
  static std::set<pid_t> pids;
  return pids;
}

void register_child(pid_t pid) {
  std::lock_guard lock(registry_mutex);
  live_children().insert(pid);
}

void unregister_child(pid_t pid) {
  std::lock_guard lock(registry_mutex);
  live_children().erase(pid);
}

void close_fd(int& fd) noexcept {
  if (fd >= 0) {
    ::close(fd);
    fd = -1;
  }
}

int remaining_ms(Clock::time_point deadline) {
  const auto left = deadline - Clock::now();
  if (left <= Clock::duration::zero()) {
    return 0;
  }
  // Round up so a wake-up never lands before the deadline.
  return static_cast<int>(std::ceil(std::chrono::duration<double, std::milli>(left).count()));
}

}  // namespace

ChildProcess ChildProcess::spawn(const std::vector<std::string>& argv,
                                 const std::optional<std::filesystem::path>& working_dir, bool forward_stderr) {
  if (argv.empty()) {
    throw SpawnError("kernel command is empty");
  }
  int sock[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sock) != 0) {
    throw SpawnError(std::string("socketpair failed: ") + std::strerror(errno));
  }
  int err_pipe[2];
  if (::pipe2(err_pipe, O_CLOEXEC) != 0) {
    ::close(sock[0]);
    ::close(sock[1]);
    throw SpawnError(std::string("pipe failed: ") + std::strerror(errno));
  }

  // Everything the child touches is prepared before fork.
  std::vector<char*> cargv;
  cargv.reserve(argv.size() + 1);
  for (const auto& arg : argv) {
    cargv.push_back(const_cast<char*>(arg.c_str()));
  }
  cargv.push_back(nullptr);
  const std::string cwd = working_dir ? working_dir->string() : std::string();
  const pid_t parent = ::getpid();

  const pid_t pid = ::fork();
  if (pid < 0) {
    const int saved = errno;
    ::close(sock[0]);
    ::close(sock[1]);
    ::close(err_pipe[0]);
    ::close(err_pipe[1]);
    throw SpawnError(std::string("fork failed: ") + std::strerror(saved));
  }

  if (pid == 0) {
    ::prctl(PR_SET_PDEATHSIG, SIGKILL);
    if (::getppid() != parent) {
      ::_exit(127);
    }
    sigset_t none;
    sigemptyset(&none);
    ::sigprocmask(SIG_SETMASK, &none, nullptr);
    ::signal(SIGPIPE, SIG_DFL);
    ::dup2(sock[1], STDIN_FILENO);
    ::dup2(sock[1], STDOUT_FILENO);
    if (!forward_stderr) {
      const int devnull = ::open("/dev/null", O_WRONLY);
      if (devnull >= 0) {
        ::dup2(devnull, STDERR_FILENO);
      }
    }
    if (!cwd.empty() && ::chdir(cwd.c_str()) != 0) {
      // Negative: the failure happened before exec.
      const int e = -errno;
      [[maybe_unused]] auto n = ::write(err_pipe[1], &e, sizeof e);
      ::_exit(127);
    }
    ::execvp(cargv[0], cargv.data());
    const int e = errno;
    [[maybe_unused]] auto n = ::write(err_pipe[1], &e, sizeof e);
    ::_exit(127);
  }

  ::close(sock[1]);
  ::close(err_pipe[1]);
  int child_errno = 0;
  ssize_t got;
  do {
    got = ::read(err_pipe[0], &child_errno, sizeof child_errno);
  } while (got < 0 && errno == EINTR);
  ::close(err_pipe[0]);
  if (got == static_cast<ssize_t>(sizeof child_errno)) {
    ::close(sock[0]);
    int status = 0;
    ::waitpid(pid, &status, 0);
    if (child_errno < 0) {
      throw SpawnError("cannot enter working directory '" + working_dir->string() + "': " + std::strerror(-child_errno));
    }
    throw SpawnError("cannot start '" + argv.front() + "': " + std::strerror(child_errno));
  }
  register_child(pid);
  return ChildProcess(pid, sock[0]);
}

ChildProcess::ChildProcess(ChildProcess&& other) noexcept
    : pid_(std::exchange(other.pid_, -1)),
      fd_(std::exchange(other.fd_, -1)),
      buffer_(std::move(other.buffer_)),
      exit_status_(std::exchange(other.exit_status_, std::nullopt)) {}

ChildProcess& ChildProcess::operator=(ChildProcess&& other) noexcept {
  if (this != &other) {
    release();
    pid_ = std::exchange(other.pid_, -1);
    fd_ = std::exchange(other.fd_, -1);
    buffer_ = std::move(other.buffer_);
    exit_status_ = std::exchange(other.exit_status_, std::nullopt);
  }
  return *this;
}

ChildProcess::~ChildProcess() { release(); }

void ChildProcess::release() noexcept {
  if (pid_ > 0 && !exit_status_) {
    try {
      kill_now();
    } catch (...) {
    }
  }
  close_fd(fd_);
  pid_ = -1;
}

bool ChildProcess::write_line(std::string_view line) {
  if (fd_ < 0) {
    return false;
  }
  std::string data(line);
  data += '\n';
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) {
        continue;
      }
      return false;
    }
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

ChildProcess::ReadOutcome ChildProcess::read_line(Clock::time_point deadline) {
  while (true) {
    const auto newline = buffer_.find('\n');
    if (newline != std::string::npos) {
      std::string line = buffer_.substr(0, newline);
      buffer_.erase(0, newline + 1);
      return {ReadStatus::Line, std::move(line)};
    }
    if (fd_ < 0) {
      return {ReadStatus::Eof, {}};
    }
    pollfd pfd{fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, remaining_ms(deadline));
    if (ready < 0) {
      if (errno == EINTR) {
        continue;
      }
      return {ReadStatus::Eof, {}};
    }
    if (ready == 0) {
      if (Clock::now() >= deadline) {
        return {ReadStatus::Timeout, {}};
      }
      continue;
    }
    char chunk[65536];
    const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) {
        continue;
      }
      return {ReadStatus::Eof, {}};
    }
    if (n == 0) {
      return {ReadStatus::Eof, {}};
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

bool ChildProcess::poll_exit() {
  if (exit_status_) {
    return true;
  }
  if (pid_ <= 0) {
    return false;
  }
  int status = 0;
  const pid_t r = ::waitpid(pid_, &status, WNOHANG);
  if (r == pid_) {
    exit_status_ = status;
    unregister_child(pid_);
    return true;
  }
  return false;
}

void ChildProcess::stop(Seconds grace) {
  if (pid_ <= 0 || exit_status_) {
    return;
  }
  const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(grace);
  while (!poll_exit() && Clock::now() < deadline) {
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  if (!exit_status_) {
    ::kill(pid_, SIGKILL);
    int status = 0;
    while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
    }
    exit_status_ = status;
    unregister_child(pid_);
  }
  close_fd(fd_);
}

std::string ChildProcess::describe_exit() const {
  if (!exit_status_) {
    return "still running";
  }
  const int status = *exit_status_;
  if (WIFEXITED(status)) {
    return "exit code " + std::to_string(WEXITSTATUS(status));
  }
  if (WIFSIGNALED(status)) {
    const int sig = WTERMSIG(status);
    return "signal " + std::to_string(sig) + " (" + ::strsignal(sig) + ")";
  }
  return "status " + std::to_string(status);
}

std::size_t live_child_count() {
  std::lock_guard lock(registry_mutex);
  return live_children().size();
}

void install_child_cleanup_on_signals(Seconds grace) {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  ::pthread_sigmask(SIG_BLOCK, &set, nullptr);
  std::thread([set, grace] {
    int sig = 0;
    if (::sigwait(&set, &sig) != 0) {
      return;
    }
    std::set<pid_t> pids;
    {
      std::lock_guard lock(registry_mutex);
      pids = live_children();
    }
    for (pid_t pid : pids) {
      ::kill(pid, SIGTERM);
    }
    const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(grace);
    while (Clock::now() < deadline) {
      bool any = false;
      for (pid_t pid : pids) {
        any = any || ::kill(pid, 0) == 0;
      }
      if (!any) {
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    for (pid_t pid : pids) {
      ::kill(pid, SIGKILL);
    }
    ::_exit(128 + sig);
  }).detach();
}

}  // namespace visloop
