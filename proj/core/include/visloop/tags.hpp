#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "visloop/session.hpp"

namespace visloop {

// Grammar of model output:
//   <code>```lang\n...\n```</code>   a snippet to execute (fence optional)
//   <answer>\boxed{...}</answer>     the final answer
// Execution output travels back as <interpreter>...</interpreter>.

struct CodeScan {
  std::vector<std::string> blocks;
  // One entry per malformed region (for example an unclosed <code>).
  std::vector<std::string> warnings;
};

CodeScan scan_code_blocks(std::string_view text);

// Contents of every well-formed <code>...</code> region in document order with
// the triple-backtick fence (and its optional language word) removed.
std::vector<std::string> extract_code_blocks(std::string_view text);

// Payload of the last <answer> region: its last \boxed{} if any, otherwise the
// trimmed inner text. Absent when there is no region or it is blank.
std::optional<std::string> extract_answer(std::string_view text);

// Contents of the last balanced \boxed{...}. A backslash escapes the next
// character, so \{ and \} never count towards the nesting depth.
std::optional<std::string> extract_boxed(std::string_view text);

struct ModelAction {
  enum class Kind { RunCode, FinalAnswer, Neither };

  Kind kind = Kind::Neither;
  std::vector<std::string> code_blocks;
  std::string answer;
  std::vector<std::string> warnings;
};

std::string_view to_string(ModelAction::Kind kind);

// FinalAnswer beats RunCode when both are present.
ModelAction classify(std::string_view text);

std::string wrap_interpreter(const ExecResult& result);

}  // namespace visloop
