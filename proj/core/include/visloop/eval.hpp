#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "visloop/agent.hpp"
#include "visloop/trace_io.hpp"

namespace visloop {

// One line of a dataset file:
//   {"id": "...", "images": ["a.png"], "question": "...", "answer": "...",
//    "choices": ["...", ...]}          // choices optional
struct DatasetItem {
  std::string id;
  std::vector<std::filesystem::path> image_paths;
  std::string question;
  std::string answer;
  std::optional<std::vector<std::string>> choices;
};

// Relative image paths resolve against the dataset file's directory. Throws
// SchemaError (with the 1-based line number) or MissingImage.
std::vector<DatasetItem> load_dataset(const std::filesystem::path& path);
std::vector<DatasetItem> parse_dataset(std::string_view text, const std::filesystem::path& base_dir);

// Trim, case-fold, collapse whitespace, drop surrounding quotes and trailing
// punctuation.
std::string normalize_answer(std::string_view text);

// Value of an integer, decimal, exponent or a/b fraction literal.
std::optional<double> parse_number(std::string_view text);

// With choices, an option letter (A, B, ... or "(B)") stands for the option
// text on either side. Otherwise normalized equality, or numeric equality
// within 1e-6 relative when both sides are numbers.
bool score_answer(std::string_view predicted, std::string_view gold,
                  const std::optional<std::vector<std::string>>& choices = std::nullopt);

enum class EvalMode { Agent, Cot };

std::string_view to_string(EvalMode mode);
EvalMode eval_mode_from_string(std::string_view text);

struct ItemRecord {
  std::string id;
  std::optional<std::string> predicted;
  std::string gold;
  bool correct = false;
  std::size_t n_code_blocks = 0;
  std::size_t n_turns = 0;
  bool fault = false;
  Termination termination = Termination::Fault;
  // Relative to the report's output directory; empty when not persisted.
  std::string trace_file;

  bool operator==(const ItemRecord&) const = default;
};

struct RunReport {
  std::string dataset_id;
  EvalMode mode = EvalMode::Agent;
  std::size_t n_items = 0;
  double accuracy = 0.0;
  // Sorted by id.
  std::vector<ItemRecord> per_item;
  std::map<std::size_t, std::size_t> code_histogram;
  double pct_with_code = 0.0;
  std::size_t n_faults = 0;

  bool operator==(const RunReport&) const = default;
};

// Order-independent: any permutation of `records` gives the same report.
RunReport aggregate(std::string dataset_id, EvalMode mode, std::vector<ItemRecord> records);

nlohmann::json report_to_json(const RunReport& report);
RunReport report_from_json(const nlohmann::json& doc);

// "| <label> | <dataset> | <mode> | 75.9 | +7.8 |" with the delta column
// filled when a baseline report is given.
std::string table_header();
std::string table_row(const RunReport& report, std::string_view label, const RunReport* baseline = nullptr);

// block_count,items
std::string histogram_csv(const RunReport& report);

// Each call must return a client usable for the given item; returning the
// same shared instance for every item is fine.
using ClientFactory = std::function<std::shared_ptr<ChatClient>(const DatasetItem&)>;

struct BenchmarkOptions {
  std::string dataset_id;
  EvalMode mode = EvalMode::Agent;
  std::size_t parallelism = 1;
  SessionConfig session;
  SessionOptions session_options;
  // Agent mode only.
  KernelFactory kernels;
  // Traces go to <output_dir>/traces/<id>.json when set.
  std::optional<std::filesystem::path> output_dir;
  TraceWriteOptions trace_format;
};

// Item failures (unreadable images, faulted sessions) count as incorrect and
// never abort the run. Throws UsageError for invalid options.
RunReport run_benchmark(const std::vector<DatasetItem>& items, const BenchmarkOptions& options,
                        const ClientFactory& clients);

// Writes report.json, histogram.csv and table.txt into `dir`.
void write_report_files(const RunReport& report, const std::filesystem::path& dir, std::string_view label,
                        const RunReport* baseline = nullptr);

}  // namespace visloop
