#include <chrono>
#include <functional>
#include <iostream>
#include <set>

#include <spdlog/spdlog.h>
#include <visloop/errors.hpp>
#include <visloop/process.hpp>
#include <visloop/protocol.hpp>

#include "commands.hpp"

namespace visloop::cli {

namespace {

namespace proto = protocol;

struct Outcome {
  enum Kind { Pass, Fail, Skip } kind;
  std::string detail;
};

Outcome pass(std::string detail = {}) { return {Outcome::Pass, std::move(detail)}; }
Outcome fail(std::string detail) { return {Outcome::Fail, std::move(detail)}; }

std::string shorten(const std::string& s) {
  std::string out = s.size() > 120 ? s.substr(0, 120) + "..." : s;
  for (auto& c : out) {
    if (c == '\n') c = ' ';
  }
  return out;
}

Outcome expect_stdout(Kernel& kernel, const std::string& code, const std::string& want, Seconds timeout) {
  const ExecResult r = kernel.exec(code, timeout);
  if (r.status != ExecStatus::Ok) {
    return fail(std::string(to_string(r.status)) + ": " + shorten(r.error));
  }
  if (r.stdout_text != want) return fail("stdout " + shorten(r.stdout_text) + ", expected " + shorten(want));
  return pass();
}

// Talks to a fresh kernel directly: garbage in, an error result out, and the
// loop keeps serving.
Outcome check_resilience(const SupervisorConfig& sc) {
  ChildProcess child = ChildProcess::spawn(sc.command, sc.working_dir, sc.forward_stderr);
  auto read_frame = [&](Seconds wait) -> std::optional<proto::Frame> {
    const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(wait);
    auto line = child.read_line(deadline);
    if (line.status != ChildProcess::ReadStatus::Line) return std::nullopt;
    return proto::decode(line.line);
  };
  auto ready = read_frame(sc.startup_timeout);
  if (!ready || ready->kind != proto::FrameKind::Ready) return fail("no ready frame");
  child.write_line("{not a frame");
  auto reply = read_frame(Seconds{5.0});
  if (!reply) return fail("no reply to a garbage line");
  if (reply->kind != proto::FrameKind::Result || reply->status != "error") {
    return fail("garbage line answered with status '" + reply->status + "'");
  }
  child.write_line(proto::encode(proto::exec(7, "print('alive')")));
  auto after = read_frame(Seconds{5.0});
  if (!after || after->id != 7 || after->stdout_text != "alive\n") return fail("kernel stopped serving after garbage");
  child.write_line(proto::encode(proto::shutdown(8)));
  child.stop(sc.shutdown_grace);
  return pass("garbage answered with an error result, loop continued");
}

}  // namespace

int cmd_kernel_check(const CliConfig& cfg) {
  echo_config(cfg, "kernel-check");
  SupervisorConfig sc = cfg.supervisor();
  sc.restart_policy = RestartPolicy::RestartAndReport;
  const Seconds timeout{std::min(cfg.exec_timeout, 10.0)};

  int failures = 0;
  auto report = [&](const std::string& name, const Outcome& o) {
    static const char* const kLabels[] = {"PASS", "FAIL", "SKIP"};
    std::cout << kLabels[o.kind] << "  " << name;
    if (!o.detail.empty()) std::cout << ": " << o.detail;
    std::cout << std::endl;
    if (o.kind == Outcome::Fail) ++failures;
  };
  auto guarded = [&](const std::string& name, const std::function<Outcome()>& body) {
    try {
      report(name, body());
    } catch (const std::exception& e) {
      report(name, fail(e.what()));
    }
  };

  std::unique_ptr<KernelSupervisor> kernel;
  guarded("handshake", [&] {
    kernel = KernelSupervisor::spawn(sc);
    return pass("protocol version " + std::to_string(proto::kVersion) + ", pid " + std::to_string(kernel->pid()));
  });
  if (!kernel) {
    std::cout << "kernel did not start; remaining checks not run" << std::endl;
    return kExitFailure;
  }
  const bool is_mock = kernel->kernel_meta().is_object() && kernel->kernel_meta().value("kernel", "") == "mock";

  guarded("image injection", [&] {
    kernel->init_images({ImageBlob::solid(37, 23, 200, 10, 10), ImageBlob::solid(16, 9, 10, 200, 10)});
    return expect_stdout(*kernel, "print(image_clue_0.size, image_clue_1.size)", "(37, 23) (16, 9)\n", timeout);
  });
  guarded("persistence", [&] {
    auto first = expect_stdout(*kernel, "x = 41", "", timeout);
    if (first.kind == Outcome::Fail) return first;
    return expect_stdout(*kernel, "print(x + 1)", "42\n", timeout);
  });
  guarded("crash containment", [&] {
    const int gen = kernel->generation();
    const ExecResult r = kernel->exec("raise ValueError('boom')", timeout);
    if (r.status != ExecStatus::Error) return fail("status " + std::string(to_string(r.status)));
    if (r.error.find("ValueError") == std::string::npos) return fail("error text lacks the exception type");
    if (kernel->generation() != gen) return fail("kernel restarted on a plain exception");
    return expect_stdout(*kernel, "print(x)", "41\n", timeout);
  });
  guarded("figure capture", [&]() -> Outcome {
    if (is_mock) return {Outcome::Skip, "skipped (mock)"};
    const ExecResult r = kernel->exec(
        "import matplotlib.pyplot as plt\nplt.figure()\nplt.plot([0, 1], [0, 1])\nplt.show()", timeout);
    if (r.status != ExecStatus::Ok) return fail(std::string(to_string(r.status)) + ": " + shorten(r.error));
    if (r.images.size() != 1) return fail(std::to_string(r.images.size()) + " images, expected 1");
    if (!has_png_signature(r.images[0].bytes())) return fail("not a PNG");
    return pass();
  });
  guarded("pairing", [&] {
    for (int i = 0; i < 20; ++i) {
      auto o = expect_stdout(*kernel, "print(" + std::to_string(i) + ")", std::to_string(i) + "\n", timeout);
      if (o.kind == Outcome::Fail) return fail("exec " + std::to_string(i) + ": " + o.detail);
    }
    std::set<std::uint64_t> ids;
    for (const auto& ex : kernel->exchanges()) {
      if (ex.origin == ResultOrigin::ProtocolViolation) return fail("protocol violation on id " + std::to_string(ex.id));
      if (!ids.insert(ex.id).second) return fail("id " + std::to_string(ex.id) + " answered twice");
    }
    return pass(std::to_string(ids.size()) + " requests, one result each");
  });
  guarded("crash restart", [&] {
    const int gen = kernel->generation();
    const ExecResult r = kernel->exec("import os\nos._exit(3)", timeout);
    if (r.status != ExecStatus::KernelCrashed) return fail("status " + std::string(to_string(r.status)));
    if (kernel->generation() != gen + 1) return fail("generation did not advance");
    auto o = expect_stdout(*kernel, "print(image_clue_0.size)", "(37, 23)\n", timeout);
    if (o.kind == Outcome::Fail) return fail("images not re-injected: " + o.detail);
    return pass("generation " + std::to_string(gen) + " -> " + std::to_string(gen + 1));
  });
  guarded("timeout", [&] {
    const auto start = Clock::now();
    const ExecResult r = kernel->exec("import time\ntime.sleep(30)", Seconds{1.0});
    const double took = std::chrono::duration<double>(Clock::now() - start).count();
    if (r.status != ExecStatus::Timeout) return fail("status " + std::string(to_string(r.status)));
    if (took > 1.5) return fail("returned after " + std::to_string(took) + " s");
    return pass();
  });
  kernel->shutdown();
  guarded("protocol resilience", [&] { return check_resilience(sc); });

  std::cout << (failures == 0 ? "all checks passed" : std::to_string(failures) + " check(s) failed") << std::endl;
  return failures == 0 ? kExitOk : kExitFailure;
}

}  // namespace visloop::cli
