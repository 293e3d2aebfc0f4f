#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

// Supervisor <-> kernel framing: one JSON object per line over the kernel's
// stdin/stdout. docs/PROTOCOL.md is the normative description.

namespace visloop::protocol {

inline constexpr int kVersion = 1;

enum class FrameKind { Ready, Init, Exec, Result, Shutdown };

std::string_view to_string(FrameKind kind);

struct Frame {
  FrameKind kind = FrameKind::Exec;
  std::uint64_t id = 0;
  int protocol_version = 0;         // ready
  std::vector<std::string> images;  // init, result: base64 PNG
  std::string code;                 // exec
  std::string status;               // result: "ok" | "error" | "timeout"
  std::string stdout_text;          // result
  std::string error;                // result
  nlohmann::json meta;              // ready, result: optional kernel-specific details

  bool operator==(const Frame&) const = default;
};

Frame ready(int version = kVersion);
Frame init(std::uint64_t id, std::vector<std::string> images);
Frame exec(std::uint64_t id, std::string code);
Frame shutdown(std::uint64_t id);
Frame result(std::uint64_t id, std::string status, std::string stdout_text = {}, std::string error = {},
             std::vector<std::string> images = {});

// A single line without the trailing newline.
std::string encode(const Frame& frame);

// Throws ProtocolError on anything that is not a well-formed frame.
Frame decode(std::string_view line);

}  // namespace visloop::protocol
