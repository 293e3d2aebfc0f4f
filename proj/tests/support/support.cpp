#include "support.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace visloop::testing {

namespace fs = std::filesystem;

fs::path fixtures_dir() { return VISLOOP_TEST_FIXTURES; }
fs::path fixture(std::string_view relative) { return fixtures_dir() / relative; }
fs::path mock_kernel_binary() { return VISLOOP_TEST_MOCK_KERNEL; }
fs::path cli_binary() { return VISLOOP_TEST_CLI; }

std::vector<std::string> mock_command(std::vector<std::string> extra) {
  std::vector<std::string> cmd{mock_kernel_binary().string()};
  cmd.insert(cmd.end(), extra.begin(), extra.end());
  return cmd;
}

TempDir::TempDir(std::string_view tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          (std::string(tag) + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string shell_quote(std::string_view word) {
  std::string out = "'";
  for (char c : word) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

CommandResult run_command(const std::string& command_line) {
  CommandResult result;
  FILE* pipe = ::popen(command_line.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed");
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) {
    result.output.append(buf.data(), n);
  }
  const int status = ::pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  return result;
}

// ---- generators

namespace {

void append_code_point(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

std::size_t pick(std::mt19937_64& rng, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

}  // namespace

std::string random_utf8(std::mt19937_64& rng, std::size_t max_code_points) {
  std::string out;
  const std::size_t n = pick(rng, max_code_points + 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t cp;
    switch (pick(rng, 4)) {
      case 0: cp = static_cast<std::uint32_t>(0x20 + pick(rng, 0x5F)); break;
      case 1: cp = static_cast<std::uint32_t>(pick(rng, 0x80)); break;
      case 2: cp = static_cast<std::uint32_t>(0x80 + pick(rng, 0xD800 - 0x80)); break;
      default: cp = static_cast<std::uint32_t>(0xE000 + pick(rng, 0x110000 - 0xE000)); break;
    }
    append_code_point(out, cp);
  }
  return out;
}

std::string random_model_text(std::mt19937_64& rng) {
  static const char* const kPieces[] = {"<code>", "</code>", "<answer>", "</answer>", "\\boxed{", "{", "}", "\\",
                                        "```", "```python\n", "\n", "<interpreter>", "</interpreter>", " "};
  std::string out;
  const std::size_t parts = pick(rng, 12);
  for (std::size_t i = 0; i < parts; ++i) {
    if (pick(rng, 2) == 0) {
      out += kPieces[pick(rng, std::size(kPieces))];
    } else {
      out += random_utf8(rng, 16);
    }
  }
  // Occasional raw bytes that are not valid UTF-8 at all.
  if (pick(rng, 8) == 0) {
    out += static_cast<char>(0x80 + pick(rng, 0x80));
    out += static_cast<char>(0xC0 + pick(rng, 0x40));
  }
  return out;
}

std::string random_snippet(std::mt19937_64& rng) {
  static const char* const kLines[] = {
      "x = 1",        "print(x)",          "import numpy as np",         "y = {'a': [1, 2]}",
      "s = \"```\"",  "# comment <tag>",   "def f(a):\n    return a*2", "z = f'{x:.2f}'",
      "",             "    indented",      "print('\\\\boxed{1}')",      "a = b[1:2, 3:4]",
      "t = '''\n'''", "plt.show()",        "w = 'ünïcødé ✓'",            "q = x < y > z",
  };
  std::string out;
  const std::size_t lines = 1 + pick(rng, 6);
  for (std::size_t i = 0; i < lines; ++i) {
    if (i) out += "\n";
    out += kLines[pick(rng, std::size(kLines))];
  }
  return out;
}

std::string random_brace_string(std::mt19937_64& rng) {
  static const char* const kAtoms[] = {"{", "}", "\\", "a", "1", " ", "\\boxed{", "\\{", "\\}", "x^{2}"};
  std::string out;
  const std::size_t n = pick(rng, 24);
  for (std::size_t i = 0; i < n; ++i) out += kAtoms[pick(rng, std::size(kAtoms))];
  return out;
}

SessionTrace random_trace(std::mt19937_64& rng) {
  auto image = [&] {
    const auto w = static_cast<std::uint32_t>(1 + pick(rng, 6));
    const auto h = static_cast<std::uint32_t>(1 + pick(rng, 6));
    return ImageBlob::solid(w, h, static_cast<std::uint8_t>(pick(rng, 256)), static_cast<std::uint8_t>(pick(rng, 256)),
                            static_cast<std::uint8_t>(pick(rng, 256)));
  };
  auto real = [&] { return std::uniform_real_distribution<double>(0.0, 100.0)(rng); };

  SessionTrace t;
  t.trace_id = "t" + std::to_string(pick(rng, 1000000));
  t.benchmark_id = pick(rng, 2) ? "bench" : random_utf8(rng, 6);
  t.query = random_utf8(rng, 40);
  for (std::size_t i = pick(rng, 3); i > 0; --i) t.images.push_back(image());

  const std::size_t n_turns = pick(rng, 4);
  for (std::size_t ti = 0; ti < n_turns; ++ti) {
    Turn turn;
    turn.index = ti;
    turn.model_text = random_utf8(rng, 60);
    const std::size_t blocks = pick(rng, 3);
    std::vector<ContentPart> parts;
    for (std::size_t b = 0; b < blocks; ++b) {
      turn.code_blocks.push_back(random_snippet(rng));
      ExecResult r;
      r.status = static_cast<ExecStatus>(pick(rng, 4));
      r.stdout_text = random_utf8(rng, 20);
      if (r.status != ExecStatus::Ok) r.error = random_utf8(rng, 20);
      if (pick(rng, 3) == 0) r.warnings = random_utf8(rng, 10);
      for (std::size_t k = pick(rng, 2); k > 0; --k) r.images.push_back(image());
      r.wall_time = real();
      parts.push_back(ContentPart::text(random_utf8(rng, 20)));
      for (const auto& img : r.images) parts.push_back(ContentPart::image(img));
      turn.exec_results.push_back(std::move(r));
    }
    if (blocks > 0) turn.clue_message = Message(Role::User, std::move(parts));
    for (std::size_t w = pick(rng, 2); w > 0; --w) turn.warnings.push_back(random_utf8(rng, 10));
    t.turns.push_back(std::move(turn));
  }
  t.termination = static_cast<Termination>(pick(rng, 4));
  if (t.termination == Termination::Answered) t.final_answer = random_utf8(rng, 12);
  for (std::size_t f = pick(rng, 3); f > 0; --f) {
    FaultRecord fault;
    if (pick(rng, 2)) fault.turn = pick(rng, 5);
    fault.kind = pick(rng, 2) ? "model" : "kernel";
    fault.message = random_utf8(rng, 20);
    t.faults.push_back(std::move(fault));
  }
  t.effective_config = {{"max_turns", 1 + pick(rng, 20)}, {"exec_timeout", real()}, {"note", random_utf8(rng, 8)}};
  return t;
}

// ---- oracles

std::string reference_base64(const std::vector<std::uint8_t>& data) {
  static const char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::vector<int> bits;
  for (std::uint8_t byte : data) {
    for (int b = 7; b >= 0; --b) bits.push_back((byte >> b) & 1);
  }
  while (bits.size() % 6 != 0) bits.push_back(0);
  std::string out;
  for (std::size_t i = 0; i < bits.size(); i += 6) {
    int v = 0;
    for (int k = 0; k < 6; ++k) v = v * 2 + bits[i + k];
    out += kAlphabet[v];
  }
  while (out.size() % 4 != 0) out += '=';
  return out;
}

namespace {

// Is `span` a complete balanced body, i.e. does depth never drop below zero
// and end at exactly zero, with backslash escaping the following character?
bool balanced_body(std::string_view span) {
  int depth = 0;
  bool escaped = false;
  for (char c : span) {
    if (escaped) {
      escaped = false;
      continue;
    }
    if (c == '\\') {
      escaped = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth < 0) return false;
    }
  }
  return depth == 0 && !escaped;
}

}  // namespace

std::optional<std::string> brute_force_boxed(std::string_view text) {
  const std::string_view open = "\\boxed{";
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i + open.size() <= text.size(); ++i) {
    if (text.substr(i, open.size()) == open) starts.push_back(i + open.size());
  }
  for (auto it = starts.rbegin(); it != starts.rend(); ++it) {
    // The shortest candidate whose body balances and whose closing brace is
    // not itself escaped.
    for (std::size_t end = *it; end < text.size(); ++end) {
      if (text[end] != '}') continue;
      const std::string_view body = text.substr(*it, end - *it);
      if (balanced_body(body)) return std::string(body);
    }
  }
  return std::nullopt;
}

}  // namespace visloop::testing
