#include "visloop/tags.hpp"

#include <algorithm>

namespace visloop {
namespace {

constexpr std::string_view kCodeOpen = "<code>";
constexpr std::string_view kCodeClose = "</code>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";
constexpr std::string_view kBoxedOpen = "\\boxed{";
constexpr std::string_view kFence = "```";

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) {
    s.remove_prefix(1);
  }
  while (!s.empty() && is_space(s.back())) {
    s.remove_suffix(1);
  }
  return s;
}

bool is_language_word(std::string_view s) {
  s = trim(s);
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '+' ||
           c == '-' || c == '.';
  });
}

// Strips the markdown fence from the inside of a <code> region. Text without a
// leading fence is returned untouched.
std::string strip_fence(std::string_view inner, std::vector<std::string>& warnings) {
  std::size_t first = 0;
  while (first < inner.size() && is_space(inner[first])) {
    ++first;
  }
  if (inner.substr(first, kFence.size()) != kFence) {
    return std::string(inner);
  }
  const std::size_t after_open = first + kFence.size();
  std::size_t content_begin = after_open;
  const auto newline = inner.find('\n', after_open);
  if (newline != std::string_view::npos && is_language_word(inner.substr(after_open, newline - after_open))) {
    content_begin = newline + 1;
  }

  const auto close = inner.rfind(kFence);
  if (close == std::string_view::npos || close < content_begin ||
      !trim(inner.substr(close + kFence.size())).empty()) {
    warnings.emplace_back("code fence opened but never closed");
    return std::string(inner.substr(content_begin));
  }
  return std::string(inner.substr(content_begin, close - content_begin));
}

// Returns the balanced contents that start right after an opening brace at
// `begin`, or nothing if the text ends first.
std::optional<std::string_view> balanced_from(std::string_view text, std::size_t begin) {
  int depth = 1;
  for (std::size_t i = begin; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\\') {
      ++i;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) {
        return text.substr(begin, i - begin);
      }
    }
  }
  return std::nullopt;
}

}  // namespace

CodeScan scan_code_blocks(std::string_view text) {
  CodeScan scan;
  std::size_t pos = 0;
  while (true) {
    const auto open = text.find(kCodeOpen, pos);
    if (open == std::string_view::npos) {
      break;
    }
    const std::size_t inner_begin = open + kCodeOpen.size();
    const auto close = text.find(kCodeClose, inner_begin);
    if (close == std::string_view::npos) {
      scan.warnings.push_back("unclosed <code> tag at offset " + std::to_string(open));
      break;
    }
    const auto reopen = text.find(kCodeOpen, inner_begin);
    if (reopen != std::string_view::npos && reopen < close) {
      scan.warnings.push_back("unclosed <code> tag at offset " + std::to_string(open));
      pos = reopen;
      continue;
    }
    scan.blocks.push_back(strip_fence(text.substr(inner_begin, close - inner_begin), scan.warnings));
    pos = close + kCodeClose.size();
  }
  return scan;
}

std::vector<std::string> extract_code_blocks(std::string_view text) { return scan_code_blocks(text).blocks; }

std::optional<std::string> extract_boxed(std::string_view text) {
  auto pos = text.rfind(kBoxedOpen);
  while (pos != std::string_view::npos) {
    if (auto content = balanced_from(text, pos + kBoxedOpen.size())) {
      return std::string(*content);
    }
    if (pos == 0) {
      break;
    }
    pos = text.rfind(kBoxedOpen, pos - 1);
  }
  return std::nullopt;
}

std::optional<std::string> extract_answer(std::string_view text) {
  std::optional<std::string_view> last_inner;
  std::size_t pos = 0;
  while (true) {
    const auto open = text.find(kAnswerOpen, pos);
    if (open == std::string_view::npos) {
      break;
    }
    const std::size_t inner_begin = open + kAnswerOpen.size();
    const auto close = text.find(kAnswerClose, inner_begin);
    if (close == std::string_view::npos) {
      break;
    }
    last_inner = text.substr(inner_begin, close - inner_begin);
    pos = close + kAnswerClose.size();
  }
  if (!last_inner) {
    return std::nullopt;
  }
  if (auto boxed = extract_boxed(*last_inner)) {
    if (trim(*boxed).empty()) {
      return std::nullopt;
    }
    return boxed;
  }
  const auto raw = trim(*last_inner);
  if (raw.empty()) {
    return std::nullopt;
  }
  return std::string(raw);
}

std::string_view to_string(ModelAction::Kind kind) {
  switch (kind) {
    case ModelAction::Kind::RunCode:
      return "run_code";
    case ModelAction::Kind::FinalAnswer:
      return "final_answer";
    case ModelAction::Kind::Neither:
      return "neither";
  }
  return "unknown";
}

ModelAction classify(std::string_view text) {
  ModelAction action;
  auto scan = scan_code_blocks(text);
  action.warnings = std::move(scan.warnings);
  if (auto answer = extract_answer(text)) {
    action.kind = ModelAction::Kind::FinalAnswer;
    action.answer = std::move(*answer);
  } else if (!scan.blocks.empty()) {
    action.kind = ModelAction::Kind::RunCode;
    action.code_blocks = std::move(scan.blocks);
  }
  return action;
}

std::string wrap_interpreter(const ExecResult& result) {
  std::string out = "<interpreter>";
  out += result.stdout_text;
  auto start_section = [&out] {
    if (out.size() > std::string_view("<interpreter>").size() && out.back() != '\n') {
      out += '\n';
    }
  };
  if (!result.warnings.empty()) {
    start_section();
    out += "[stderr]\n";
    out += result.warnings;
  }
  if (result.status != ExecStatus::Ok) {
    start_section();
    out += "[";
    out += to_string(result.status);
    out += "]\n";
    out += result.error;
  }
  out += "</interpreter>";
  return out;
}

}  // namespace visloop
