#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "visloop/model_client.hpp"
#include "visloop/session.hpp"

namespace visloop {

enum class MajorCategory {
  BasicImageProcessing,
  AdvancedImageProcessing,
  VisualPromptingSketching,
  NumericalStatistical,
  LongTail,
};

enum class SubCategory {
  Cropping,
  Rotation,
  Enhancement,
  Segmentation,
  Detection,
  OCR,
  RenderMarks,
  RenderLines,
  ImageHistogram,
  NumericalAnalysis,
};

inline constexpr MajorCategory kAllMajors[] = {
    MajorCategory::BasicImageProcessing, MajorCategory::AdvancedImageProcessing,
    MajorCategory::VisualPromptingSketching, MajorCategory::NumericalStatistical, MajorCategory::LongTail};

inline constexpr SubCategory kAllSubs[] = {
    SubCategory::Cropping,     SubCategory::Rotation,    SubCategory::Enhancement,    SubCategory::Segmentation,
    SubCategory::Detection,    SubCategory::OCR,         SubCategory::RenderMarks,    SubCategory::RenderLines,
    SubCategory::ImageHistogram, SubCategory::NumericalAnalysis};

MajorCategory major_of(SubCategory sub) noexcept;

std::string_view to_string(MajorCategory major);
std::string_view to_string(SubCategory sub);
MajorCategory major_from_string(std::string_view text);
SubCategory sub_from_string(std::string_view text);

struct ToolCategory {
  MajorCategory major = MajorCategory::LongTail;
  std::optional<SubCategory> sub;

  static ToolCategory of(SubCategory sub) { return {major_of(sub), sub}; }
  static ToolCategory long_tail() { return {}; }

  // Throws InvariantError when sub does not belong to major.
  void validate() const;
  // "basic_image_processing/cropping" or "long_tail".
  std::string label() const;

  bool operator==(const ToolCategory&) const = default;
};

struct SnippetRecord {
  std::string code;
  std::string benchmark_id;
  std::string trace_id;
  std::size_t turn_index = 0;
  std::optional<ToolCategory> category;
  std::optional<std::vector<double>> embedding;
  // Set when the snippet had no features and got the zero vector.
  bool empty_embedding = false;
};

// One per code block, in trace, turn and block order.
std::vector<SnippetRecord> collect_snippets(const std::vector<SessionTrace>& traces);

// Ordered pattern rules, first match wins; nothing matches -> long tail.
class RuleTable {
 public:
  struct Rule {
    std::string name;
    ToolCategory category;
    std::vector<std::string> patterns;
    std::vector<std::regex> compiled;
  };

  // The table compiled in from core/assets/taxonomy_rules.json.
  static const RuleTable& builtin();
  // Throws SchemaError on malformed documents or invalid patterns.
  static RuleTable from_json(std::string_view document);
  static RuleTable from_file(const std::filesystem::path& path);

  ToolCategory classify(std::string_view code) const;
  // Name of the first matching rule, if any.
  std::optional<std::string> matching_rule(std::string_view code) const;

  const std::vector<Rule>& rules() const noexcept { return rules_; }

 private:
  std::vector<Rule> rules_;
};

ToolCategory classify_snippet(std::string_view code, const RuleTable& table = RuleTable::builtin());

void classify_records(std::vector<SnippetRecord>& records, const RuleTable& table = RuleTable::builtin());

// Identifiers and call names of a snippet, comments and string literals
// skipped. Calls contribute both "name" and "call:name".
std::vector<std::string> code_features(std::string_view code);

inline constexpr std::size_t kLexicalDim = 256;

// FNV-1a feature hashing of code_features into `dim` buckets, L2-normalized.
// Empty when the snippet has no features (then all zeros).
std::vector<double> lexical_embedding(std::string_view code, std::size_t dim = kLexicalDim);

void embed_lexical(std::vector<SnippetRecord>& records, std::size_t dim = kLexicalDim);

struct RemoteEmbeddingConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key_env = "OPENAI_API_KEY";
  std::string model = "text-embedding-3-large";
  std::size_t batch_size = 64;
  int max_retries = 3;
  Seconds request_timeout{60.0};
  Seconds initial_backoff{1.0};
};

// POSTs batches to <base_url>/embeddings. Throws AuthError, TransportError,
// ProviderError, SchemaError (unexpected response shape).
std::vector<std::vector<double>> remote_embeddings(const std::vector<std::string>& texts,
                                                   const RemoteEmbeddingConfig& config, HttpTransport& transport,
                                                   const Sleeper& sleeper = real_sleeper());

void embed_remote(std::vector<SnippetRecord>& records, const RemoteEmbeddingConfig& config,
                  HttpTransport& transport, const Sleeper& sleeper = real_sleeper());

struct CategoryShare {
  std::string level;  // "major" or "sub"
  std::string category;
  std::size_t count = 0;
  double fraction = 0.0;
};

struct BenchmarkDistribution {
  std::string benchmark_id;
  std::size_t n_snippets = 0;
  // Every major, then every sub plus "long_tail" at the sub level; each level
  // sums to 1.
  std::vector<CategoryShare> shares;

  double fraction(std::string_view level, std::string_view category) const;
};

// Sorted by benchmark id; benchmarks without snippets do not appear. Throws
// UsageError when a record is uncategorized.
std::vector<BenchmarkDistribution> distribution_report(const std::vector<SnippetRecord>& records);

// benchmark,level,category,count,fraction
std::string distribution_csv(const std::vector<BenchmarkDistribution>& report);
std::string distribution_summary(const std::vector<BenchmarkDistribution>& report);

// Human-readable listing of clusters: size, dominant rule category and a few
// member snippets' first lines.
std::string cluster_summary(const std::vector<SnippetRecord>& records, const std::vector<std::size_t>& assignments,
                            std::size_t k);

}  // namespace visloop
