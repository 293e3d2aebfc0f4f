#include "visloop/session.hpp"

#include <array>
#include <utility>

#include "visloop/errors.hpp"

namespace visloop {
namespace {

template <typename Enum, std::size_t N>
std::string_view name_of(Enum value, const std::array<std::pair<Enum, std::string_view>, N>& table) {
  for (const auto& [candidate, name] : table) {
    if (candidate == value) {
      return name;
    }
  }
  return "unknown";
}

template <typename Enum, std::size_t N>
Enum parse_name(std::string_view text, const std::array<std::pair<Enum, std::string_view>, N>& table,
                std::string_view what) {
  for (const auto& [candidate, name] : table) {
    if (name == text) {
      return candidate;
    }
  }
  throw SchemaError("unknown " + std::string(what) + ": '" + std::string(text) + "'");
}

constexpr std::array<std::pair<Role, std::string_view>, 3> kRoles{{
    {Role::System, "system"},
    {Role::User, "user"},
    {Role::Assistant, "assistant"},
}};

constexpr std::array<std::pair<ExecStatus, std::string_view>, 4> kStatuses{{
    {ExecStatus::Ok, "ok"},
    {ExecStatus::Error, "error"},
    {ExecStatus::Timeout, "timeout"},
    {ExecStatus::KernelCrashed, "kernel_crashed"},
}};

constexpr std::array<std::pair<RestartPolicy, std::string_view>, 2> kPolicies{{
    {RestartPolicy::RestartAndReport, "restart_and_report"},
    {RestartPolicy::FailSession, "fail_session"},
}};

constexpr std::array<std::pair<Termination, std::string_view>, 4> kTerminations{{
    {Termination::Answered, "answered"},
    {Termination::MaxTurnsExceeded, "max_turns_exceeded"},
    {Termination::Unanswered, "unanswered"},
    {Termination::Fault, "fault"},
}};

}  // namespace

std::string_view to_string(Role role) { return name_of(role, kRoles); }
Role role_from_string(std::string_view text) { return parse_name(text, kRoles, "role"); }

std::string_view to_string(ExecStatus status) { return name_of(status, kStatuses); }
ExecStatus exec_status_from_string(std::string_view text) {
  return parse_name(text, kStatuses, "exec status");
}

std::string_view to_string(RestartPolicy policy) { return name_of(policy, kPolicies); }
RestartPolicy restart_policy_from_string(std::string_view text) {
  return parse_name(text, kPolicies, "restart policy");
}

std::string_view to_string(Termination termination) { return name_of(termination, kTerminations); }
Termination termination_from_string(std::string_view text) {
  return parse_name(text, kTerminations, "termination");
}

Message::Message(Role role, std::vector<ContentPart> parts) : role_(role), parts_(std::move(parts)) {
  if (parts_.empty()) {
    throw InvariantError("message must have at least one part");
  }
}

std::string Message::joined_text() const {
  std::string out;
  for (const auto& part : parts_) {
    if (part.is_text()) {
      out += part.as_text();
    }
  }
  return out;
}

std::size_t Message::image_count() const noexcept {
  std::size_t n = 0;
  for (const auto& part : parts_) {
    n += part.is_image() ? 1 : 0;
  }
  return n;
}

void ExecResult::validate(std::optional<Seconds> timeout) const {
  if (status == ExecStatus::Ok && !error.empty()) {
    throw InvariantError("exec result with status ok carries error text");
  }
  if (status == ExecStatus::Timeout && timeout && wall_time < timeout->count()) {
    throw InvariantError("timeout result reports wall time below the configured timeout");
  }
  if (wall_time < 0.0) {
    throw InvariantError("negative wall time");
  }
}

void Turn::validate() const {
  if (exec_results.size() != code_blocks.size()) {
    throw InvariantError("turn " + std::to_string(index) + ": " + std::to_string(code_blocks.size()) +
                         " code blocks but " + std::to_string(exec_results.size()) + " exec results");
  }
  if (clue_message.has_value() != !code_blocks.empty()) {
    throw InvariantError("turn " + std::to_string(index) +
                         ": clue message must be present exactly when code was run");
  }
  for (const auto& result : exec_results) {
    result.validate();
  }
}

void SessionConfig::validate() const {
  if (max_turns < 1) {
    throw UsageError("max_turns must be at least 1");
  }
  if (!(exec_timeout.count() > 0.0)) {
    throw UsageError("exec_timeout must be positive");
  }
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw UsageError("temperature must lie in [0, 2]");
  }
}

nlohmann::json SessionConfig::to_json() const {
  return {
      {"max_turns", max_turns},
      {"exec_timeout", exec_timeout.count()},
      {"temperature", temperature},
      {"model_id", model_id},
      {"kernel_restart_policy", std::string(to_string(kernel_restart_policy))},
  };
}

void SessionTrace::validate() const {
  if (final_answer.has_value() != (termination == Termination::Answered)) {
    throw InvariantError("final_answer must be present exactly when termination is answered");
  }
  for (std::size_t i = 0; i < turns.size(); ++i) {
    if (turns[i].index != i) {
      throw InvariantError("turn indices must run 0.." + std::to_string(turns.size() - 1) +
                           " without gaps; found " + std::to_string(turns[i].index) + " at position " +
                           std::to_string(i));
    }
    turns[i].validate();
  }
}

std::size_t SessionTrace::total_code_blocks() const noexcept {
  std::size_t n = 0;
  for (const auto& turn : turns) {
    n += turn.code_blocks.size();
  }
  return n;
}

}  // namespace visloop
