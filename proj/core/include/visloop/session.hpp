#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "visloop/image.hpp"

namespace visloop {

using Seconds = std::chrono::duration<double>;

enum class Role { System, User, Assistant };

std::string_view to_string(Role role);
Role role_from_string(std::string_view text);

// One piece of model context: text or an image, never both.
class ContentPart {
 public:
  enum class Kind { Text, Image };

  static ContentPart text(std::string value) { return ContentPart(std::move(value)); }
  static ContentPart image(ImageBlob value) { return ContentPart(std::move(value)); }

  Kind kind() const noexcept { return std::holds_alternative<std::string>(value_) ? Kind::Text : Kind::Image; }
  bool is_text() const noexcept { return kind() == Kind::Text; }
  bool is_image() const noexcept { return kind() == Kind::Image; }

  const std::string& as_text() const { return std::get<std::string>(value_); }
  const ImageBlob& as_image() const { return std::get<ImageBlob>(value_); }

  bool operator==(const ContentPart&) const = default;

 private:
  explicit ContentPart(std::string value) : value_(std::move(value)) {}
  explicit ContentPart(ImageBlob value) : value_(std::move(value)) {}

  std::variant<std::string, ImageBlob> value_;
};

// A role-tagged, non-empty, ordered list of parts.
class Message {
 public:
  // Throws InvariantError when parts is empty.
  Message(Role role, std::vector<ContentPart> parts);

  static Message text(Role role, std::string body) {
    return Message(role, {ContentPart::text(std::move(body))});
  }

  Role role() const noexcept { return role_; }
  const std::vector<ContentPart>& parts() const noexcept { return parts_; }

  // Concatenation of all text parts, in order.
  std::string joined_text() const;
  std::size_t image_count() const noexcept;

  bool operator==(const Message&) const = default;

 private:
  Role role_;
  std::vector<ContentPart> parts_;
};

enum class ExecStatus { Ok, Error, Timeout, KernelCrashed };

std::string_view to_string(ExecStatus status);
ExecStatus exec_status_from_string(std::string_view text);

struct ExecResult {
  ExecStatus status = ExecStatus::Ok;
  std::string stdout_text;
  // Traceback or supervisor diagnostic. Empty whenever status is Ok.
  std::string error;
  // Kernel stderr reported alongside an Ok status (warnings and similar).
  std::string warnings;
  std::vector<ImageBlob> images;
  double wall_time = 0.0;

  // Throws InvariantError. `timeout` enables the Timeout wall-time check.
  void validate(std::optional<Seconds> timeout = std::nullopt) const;

  bool operator==(const ExecResult&) const = default;
};

struct Turn {
  std::size_t index = 0;
  std::string model_text;
  std::vector<std::string> code_blocks;
  std::vector<ExecResult> exec_results;
  // The multimodal clue fed back after executing code_blocks.
  std::optional<Message> clue_message;
  // Parser diagnostics such as unclosed tags.
  std::vector<std::string> warnings;

  void validate() const;

  bool operator==(const Turn&) const = default;
};

enum class RestartPolicy { RestartAndReport, FailSession };

std::string_view to_string(RestartPolicy policy);
RestartPolicy restart_policy_from_string(std::string_view text);

struct SessionConfig {
  std::size_t max_turns = 10;
  Seconds exec_timeout{60.0};
  double temperature = 0.6;
  std::string model_id;
  RestartPolicy kernel_restart_policy = RestartPolicy::RestartAndReport;

  // Throws UsageError.
  void validate() const;
  nlohmann::json to_json() const;
};

// Unanswered marks a single-shot baseline run whose reply carried no answer.
enum class Termination { Answered, MaxTurnsExceeded, Unanswered, Fault };

std::string_view to_string(Termination termination);
Termination termination_from_string(std::string_view text);

struct FaultRecord {
  // Turn index the fault belongs to, or absent for session-level faults.
  std::optional<std::size_t> turn;
  std::string kind;
  std::string message;

  bool operator==(const FaultRecord&) const = default;
};

struct SessionTrace {
  std::string trace_id;
  std::string benchmark_id;
  std::string query;
  std::vector<ImageBlob> images;
  std::vector<Turn> turns;
  std::optional<std::string> final_answer;
  Termination termination = Termination::Fault;
  std::vector<FaultRecord> faults;
  // Effective configuration the session ran under; null when not recorded.
  nlohmann::json effective_config;

  // Throws InvariantError.
  void validate() const;
  std::size_t total_code_blocks() const noexcept;

  bool operator==(const SessionTrace&) const = default;
};

}  // namespace visloop
