// Deterministic stand-in for the Python kernel. Speaks the line protocol on
// stdin/stdout and runs snippets with mini_python. Fault flags make it
// misbehave on a chosen exec frame so supervisor recovery can be tested.

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <visloop/errors.hpp>
#include <visloop/image.hpp>
#include <visloop/protocol.hpp>

#include "mini_python.hpp"

namespace proto = visloop::protocol;

namespace {

struct Faults {
  int protocol_version = proto::kVersion;
  bool no_handshake = false;
  bool wrong_result_ids = false;
  int crash_on_exec = 0;
  int garbage_on_exec = 0;
  int drop_on_exec = 0;
  int startup_delay_ms = 0;
};

void send(const proto::Frame& frame) {
  const std::string line = proto::encode(frame) + "\n";
  std::fwrite(line.data(), 1, line.size(), stdout);
  std::fflush(stdout);
}

proto::Frame handle_init(const proto::Frame& frame, mini_python::Interpreter& interp) {
  for (std::size_t i = 0; i < frame.images.size(); ++i) {
    const std::string name = "image_clue_" + std::to_string(i);
    try {
      interp.bind_image(name, visloop::ImageBlob::from_base64(frame.images[i]));
    } catch (const std::exception& e) {
      return proto::result(frame.id, "error", {}, name + ": " + e.what());
    }
  }
  return proto::result(frame.id, "ok");
}

proto::Frame handle_exec(const proto::Frame& frame, mini_python::Interpreter& interp) {
  const mini_python::RunOutcome out = interp.run(frame.code);
  std::vector<std::string> images;
  for (const auto& fig : out.figures) {
    images.push_back(fig.to_base64());
  }
  std::string error = out.stderr_text + out.traceback;
  return proto::result(frame.id, out.ok ? "ok" : "error", out.stdout_text, std::move(error), std::move(images));
}

}  // namespace

int main(int argc, char** argv) {
  Faults faults;
  CLI::App app{"visloop mock kernel"};
  app.add_option("--protocol-version", faults.protocol_version, "Version announced in the ready frame");
  app.add_flag("--no-handshake", faults.no_handshake, "Never send the ready frame");
  app.add_flag("--wrong-result-ids", faults.wrong_result_ids, "Answer exec frames with a mismatched id");
  app.add_option("--crash-on-exec", faults.crash_on_exec, "Exit abruptly on the Kth exec frame (1-based)");
  app.add_option("--emit-garbage-on-exec", faults.garbage_on_exec, "Reply to the Kth exec frame with a non-JSON line");
  app.add_option("--drop-result-on-exec", faults.drop_on_exec, "Never answer the Kth exec frame");
  app.add_option("--startup-delay-ms", faults.startup_delay_ms, "Sleep before the handshake");
  CLI11_PARSE(app, argc, argv);

  if (faults.startup_delay_ms > 0) {
    std::this_thread::sleep_for(std::chrono::milliseconds(faults.startup_delay_ms));
  }
  if (!faults.no_handshake) {
    proto::Frame ready = proto::ready(faults.protocol_version);
    ready.meta = {{"kernel", "mock"}};
    send(ready);
  }

  mini_python::Interpreter interp;
  int exec_count = 0;
  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    proto::Frame frame;
    try {
      frame = proto::decode(line);
    } catch (const visloop::Error& e) {
      send(proto::result(0, "error", {}, std::string("ProtocolError: ") + e.what()));
      continue;
    }
    switch (frame.kind) {
      case proto::FrameKind::Init:
        send(handle_init(frame, interp));
        break;
      case proto::FrameKind::Exec: {
        ++exec_count;
        if (exec_count == faults.crash_on_exec) std::_Exit(3);
        if (exec_count == faults.garbage_on_exec) {
          std::fputs("this is not a frame\n", stdout);
          std::fflush(stdout);
          break;
        }
        if (exec_count == faults.drop_on_exec) break;
        proto::Frame reply = handle_exec(frame, interp);
        if (faults.wrong_result_ids) reply.id += 1000;
        send(reply);
        break;
      }
      case proto::FrameKind::Shutdown:
        return 0;
      default:
        send(proto::result(frame.id, "error", {}, "ProtocolError: unexpected frame kind " +
                                                      std::string(proto::to_string(frame.kind))));
    }
  }
  return 0;
}
