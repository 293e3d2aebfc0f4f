#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <visloop/session.hpp>

// Helpers shared by the unit tests, the CLI tests and the acceptance binary.
// The oracles here are written independently of the library code they check.

namespace visloop::testing {

std::filesystem::path fixtures_dir();
std::filesystem::path fixture(std::string_view relative);
std::filesystem::path mock_kernel_binary();
std::filesystem::path cli_binary();

std::vector<std::string> mock_command(std::vector<std::string> extra = {});

// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(std::string_view tag = "visloop");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(std::string_view name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);

// Runs a command line through /bin/sh; returns the exit status and stdout.
struct CommandResult {
  int exit_code = -1;
  std::string output;
};
CommandResult run_command(const std::string& command_line);
std::string shell_quote(std::string_view word);

// ---- generators

std::string random_utf8(std::mt19937_64& rng, std::size_t max_code_points);
// Random text that sometimes contains the tag vocabulary.
std::string random_model_text(std::mt19937_64& rng);
// Python-looking snippet that never contains the code tags themselves.
std::string random_snippet(std::mt19937_64& rng);
// Strings over { } \ and a few letters, with \boxed{ inserted at random.
std::string random_brace_string(std::mt19937_64& rng);
SessionTrace random_trace(std::mt19937_64& rng);

// ---- oracles

// RFC 4648 encoder written bit by bit.
std::string reference_base64(const std::vector<std::uint8_t>& data);

// Last \boxed{...} whose braces balance, found by trying every candidate end
// position from the left and checking the candidate span in isolation.
std::optional<std::string> brute_force_boxed(std::string_view text);

}  // namespace visloop::testing
