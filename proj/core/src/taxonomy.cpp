#include "visloop/taxonomy.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "visloop/errors.hpp"

namespace visloop {
namespace assets {
extern const std::string_view taxonomy_rules;
}  // namespace assets

namespace {

using nlohmann::json;

constexpr std::string_view kMajorNames[] = {"basic_image_processing", "advanced_image_processing",
                                            "visual_prompting_sketching", "numerical_statistical", "long_tail"};

constexpr std::string_view kSubNames[] = {"cropping",     "rotation",        "enhancement",  "segmentation",
                                          "detection",    "ocr",             "render_marks", "render_lines",
                                          "image_histogram", "numerical_analysis"};

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string first_line(std::string_view code) {
  const auto start = code.find_first_not_of(" \t\r\n");
  if (start == std::string_view::npos) {
    return "(empty)";
  }
  code.remove_prefix(start);
  std::string line(code.substr(0, code.find('\n')));
  if (line.size() > 72) {
    line = line.substr(0, 69) + "...";
  }
  return line;
}

}  // namespace

MajorCategory major_of(SubCategory sub) noexcept {
  switch (sub) {
    case SubCategory::Cropping:
    case SubCategory::Rotation:
    case SubCategory::Enhancement:
      return MajorCategory::BasicImageProcessing;
    case SubCategory::Segmentation:
    case SubCategory::Detection:
    case SubCategory::OCR:
      return MajorCategory::AdvancedImageProcessing;
    case SubCategory::RenderMarks:
    case SubCategory::RenderLines:
      return MajorCategory::VisualPromptingSketching;
    case SubCategory::ImageHistogram:
    case SubCategory::NumericalAnalysis:
      return MajorCategory::NumericalStatistical;
  }
  return MajorCategory::LongTail;
}

std::string_view to_string(MajorCategory major) { return kMajorNames[static_cast<std::size_t>(major)]; }
std::string_view to_string(SubCategory sub) { return kSubNames[static_cast<std::size_t>(sub)]; }

MajorCategory major_from_string(std::string_view text) {
  for (std::size_t i = 0; i < std::size(kMajorNames); ++i) {
    if (kMajorNames[i] == text) {
      return static_cast<MajorCategory>(i);
    }
  }
  throw SchemaError("unknown major category '" + std::string(text) + "'");
}

SubCategory sub_from_string(std::string_view text) {
  for (std::size_t i = 0; i < std::size(kSubNames); ++i) {
    if (kSubNames[i] == text) {
      return static_cast<SubCategory>(i);
    }
  }
  throw SchemaError("unknown sub-category '" + std::string(text) + "'");
}

void ToolCategory::validate() const {
  if (sub && major_of(*sub) != major) {
    throw InvariantError("sub-category " + std::string(to_string(*sub)) + " does not belong to " +
                         std::string(to_string(major)));
  }
}

std::string ToolCategory::label() const {
  std::string out(to_string(major));
  if (sub) {
    out += "/";
    out += to_string(*sub);
  }
  return out;
}

std::vector<SnippetRecord> collect_snippets(const std::vector<SessionTrace>& traces) {
  std::vector<SnippetRecord> records;
  for (const auto& trace : traces) {
    for (const auto& turn : trace.turns) {
      for (const auto& block : turn.code_blocks) {
        SnippetRecord r;
        r.code = block;
        r.benchmark_id = trace.benchmark_id;
        r.trace_id = trace.trace_id;
        r.turn_index = turn.index;
        records.push_back(std::move(r));
      }
    }
  }
  return records;
}

const RuleTable& RuleTable::builtin() {
  static const RuleTable table = from_json(assets::taxonomy_rules);
  return table;
}

RuleTable RuleTable::from_json(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("rule table is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("rules") || !doc["rules"].is_array()) {
    throw SchemaError("rule table needs a 'rules' array");
  }
  RuleTable table;
  for (const auto& entry : doc["rules"]) {
    Rule rule;
    try {
      rule.name = entry.at("name").get<std::string>();
      const auto category = entry.at("category").get<std::string>();
      rule.category = category == "long_tail" ? ToolCategory::long_tail() : ToolCategory::of(sub_from_string(category));
      rule.patterns = entry.at("any").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
      throw SchemaError(std::string("malformed rule: ") + e.what());
    }
    if (rule.patterns.empty()) {
      throw SchemaError("rule '" + rule.name + "' has no patterns");
    }
    for (const auto& pattern : rule.patterns) {
      try {
        rule.compiled.emplace_back(pattern, std::regex::ECMAScript | std::regex::optimize);
      } catch (const std::regex_error& e) {
        throw SchemaError("rule '" + rule.name + "': bad pattern '" + pattern + "': " + e.what());
      }
    }
    table.rules_.push_back(std::move(rule));
  }
  return table;
}

RuleTable RuleTable::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw SchemaError("cannot read rule table " + path.string());
  }
  std::ostringstream text;
  text << in.rdbuf();
  return from_json(text.str());
}

std::optional<std::string> RuleTable::matching_rule(std::string_view code) const {
  for (const auto& rule : rules_) {
    for (const auto& re : rule.compiled) {
      if (std::regex_search(code.begin(), code.end(), re)) {
        return rule.name;
      }
    }
  }
  return std::nullopt;
}

ToolCategory RuleTable::classify(std::string_view code) const {
  for (const auto& rule : rules_) {
    for (const auto& re : rule.compiled) {
      if (std::regex_search(code.begin(), code.end(), re)) {
        return rule.category;
      }
    }
  }
  return ToolCategory::long_tail();
}

ToolCategory classify_snippet(std::string_view code, const RuleTable& table) { return table.classify(code); }

void classify_records(std::vector<SnippetRecord>& records, const RuleTable& table) {
  for (auto& r : records) {
    r.category = table.classify(r.code);
  }
}

std::vector<std::string> code_features(std::string_view code) {
  std::vector<std::string> features;
  std::size_t i = 0;
  const std::size_t n = code.size();
  while (i < n) {
    const char c = code[i];
    if (c == '#') {
      while (i < n && code[i] != '\n') ++i;
      continue;
    }
    if (c == '"' || c == '\'') {
      const bool triple = i + 2 < n && code[i + 1] == c && code[i + 2] == c;
      i += triple ? 3 : 1;
      while (i < n) {
        if (code[i] == '\\') {
          i += 2;
          continue;
        }
        if (triple) {
          if (i + 2 < n && code[i] == c && code[i + 1] == c && code[i + 2] == c) {
            i += 3;
            break;
          }
        } else if (code[i] == c || code[i] == '\n') {
          ++i;
          break;
        }
        ++i;
      }
      continue;
    }
    if (is_ident_start(c)) {
      const std::size_t start = i;
      while (i < n && is_ident_char(code[i])) ++i;
      std::string name(code.substr(start, i - start));
      // String prefixes such as f"..." or rb'...' are not identifiers.
      if (i < n && (code[i] == '"' || code[i] == '\'') && name.size() <= 2 &&
          name.find_first_not_of("rRbBfFuU") == std::string::npos) {
        continue;
      }
      std::size_t j = i;
      while (j < n && (code[j] == ' ' || code[j] == '\t')) ++j;
      features.push_back(name);
      if (j < n && code[j] == '(') {
        features.push_back("call:" + name);
      }
      continue;
    }
    ++i;
  }
  return features;
}

std::vector<double> lexical_embedding(std::string_view code, std::size_t dim) {
  if (dim == 0) {
    throw UsageError("embedding dimension must be positive");
  }
  std::vector<double> v(dim, 0.0);
  for (const auto& feature : code_features(code)) {
    v[fnv1a(feature) % dim] += 1.0;
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  }
  return v;
}

void embed_lexical(std::vector<SnippetRecord>& records, std::size_t dim) {
  for (auto& r : records) {
    r.embedding = lexical_embedding(r.code, dim);
    r.empty_embedding = std::all_of(r.embedding->begin(), r.embedding->end(), [](double x) { return x == 0.0; });
  }
}

std::vector<std::vector<double>> remote_embeddings(const std::vector<std::string>& texts,
                                                   const RemoteEmbeddingConfig& config, HttpTransport& transport,
                                                   const Sleeper& sleeper) {
  if (config.batch_size == 0) {
    throw UsageError("embedding batch size must be positive");
  }
  ClientConfig key_config;
  key_config.api_key_env = config.api_key_env;
  const std::string key = resolve_api_key(key_config);
  std::string url = config.base_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  url += "/embeddings";

  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  std::size_t dim = 0;
  for (std::size_t begin = 0; begin < texts.size(); begin += config.batch_size) {
    const std::size_t end = std::min(texts.size(), begin + config.batch_size);
    // The endpoint rejects empty strings; a single space embeds the same way.
    json input = json::array();
    for (std::size_t i = begin; i < end; ++i) {
      input.push_back(texts[i].empty() ? std::string(" ") : texts[i]);
    }
    HttpRequest request;
    request.url = url;
    request.headers = {{"Authorization", "Bearer " + key}, {"Content-Type", "application/json"}};
    request.body = json{{"model", config.model}, {"input", input}}.dump();
    request.timeout = config.request_timeout;
    const HttpResponse http =
        post_with_retries(transport, request, config.max_retries, config.initial_backoff, sleeper);
    if (http.status == 401 || http.status == 403) {
      throw AuthError("embeddings endpoint rejected the API key (HTTP " + std::to_string(http.status) + ")");
    }
    if (http.status < 200 || http.status >= 300) {
      throw ProviderError(http.status, http.body);
    }
    std::vector<std::vector<double>> batch(end - begin);
    try {
      const json doc = json::parse(http.body);
      for (const auto& item : doc.at("data")) {
        const auto index = item.at("index").get<std::size_t>();
        if (index >= batch.size()) {
          throw SchemaError("embedding index out of range");
        }
        batch[index] = item.at("embedding").get<std::vector<double>>();
      }
    } catch (const json::exception& e) {
      throw SchemaError(std::string("unexpected embeddings response: ") + e.what());
    }
    for (auto& v : batch) {
      if (v.empty() || (dim != 0 && v.size() != dim)) {
        throw SchemaError("embeddings response has missing or inconsistent vectors");
      }
      dim = v.size();
      out.push_back(std::move(v));
    }
  }
  return out;
}

void embed_remote(std::vector<SnippetRecord>& records, const RemoteEmbeddingConfig& config,
                  HttpTransport& transport, const Sleeper& sleeper) {
  std::vector<std::string> texts;
  texts.reserve(records.size());
  for (const auto& r : records) {
    texts.push_back(r.code);
  }
  auto vectors = remote_embeddings(texts, config, transport, sleeper);
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].embedding = std::move(vectors[i]);
    records[i].empty_embedding = records[i].code.find_first_not_of(" \t\r\n") == std::string::npos;
  }
}

double BenchmarkDistribution::fraction(std::string_view level, std::string_view category) const {
  for (const auto& share : shares) {
    if (share.level == level && share.category == category) {
      return share.fraction;
    }
  }
  return 0.0;
}

std::vector<BenchmarkDistribution> distribution_report(const std::vector<SnippetRecord>& records) {
  std::map<std::string, std::vector<const SnippetRecord*>> by_benchmark;
  for (const auto& r : records) {
    if (!r.category) {
      throw UsageError("snippet from trace '" + r.trace_id + "' turn " + std::to_string(r.turn_index) +
                       " has no category");
    }
    by_benchmark[r.benchmark_id].push_back(&r);
  }
  std::vector<BenchmarkDistribution> report;
  for (const auto& [benchmark, members] : by_benchmark) {
    BenchmarkDistribution dist;
    dist.benchmark_id = benchmark;
    dist.n_snippets = members.size();
    std::map<MajorCategory, std::size_t> majors;
    std::map<std::string, std::size_t> subs;
    for (const auto* r : members) {
      ++majors[r->category->major];
      ++subs[r->category->sub ? std::string(to_string(*r->category->sub)) : "long_tail"];
    }
    const double n = static_cast<double>(members.size());
    for (auto major : kAllMajors) {
      const std::size_t count = majors[major];
      dist.shares.push_back({"major", std::string(to_string(major)), count, static_cast<double>(count) / n});
    }
    std::vector<std::string> sub_names;
    for (auto sub : kAllSubs) {
      sub_names.emplace_back(to_string(sub));
    }
    sub_names.emplace_back("long_tail");
    for (const auto& name : sub_names) {
      const std::size_t count = subs[name];
      dist.shares.push_back({"sub", name, count, static_cast<double>(count) / n});
    }
    report.push_back(std::move(dist));
  }
  return report;
}

std::string distribution_csv(const std::vector<BenchmarkDistribution>& report) {
  std::string out = "benchmark,level,category,count,fraction\n";
  char buf[64];
  for (const auto& dist : report) {
    for (const auto& share : dist.shares) {
      std::snprintf(buf, sizeof buf, "%.6f", share.fraction);
      std::string bench = dist.benchmark_id;
      if (bench.find_first_of(",\"\n") != std::string::npos) {
        std::string quoted = "\"";
        for (char c : bench) {
          quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
        }
        bench = quoted + "\"";
      }
      out += bench + "," + share.level + "," + share.category + "," + std::to_string(share.count) + "," + buf + "\n";
    }
  }
  return out;
}

std::string distribution_summary(const std::vector<BenchmarkDistribution>& report) {
  std::string out;
  char buf[128];
  for (const auto& dist : report) {
    out += dist.benchmark_id + " (" + std::to_string(dist.n_snippets) + " snippets)\n";
    for (const auto& share : dist.shares) {
      if (share.level != "major") {
        continue;
      }
      std::snprintf(buf, sizeof buf, "  %-28s %5.1f%%  (%zu)\n", share.category.c_str(), share.fraction * 100.0,
                    share.count);
      out += buf;
    }
    const CategoryShare* top = nullptr;
    for (const auto& share : dist.shares) {
      if (share.level == "sub" && (!top || share.count > top->count)) {
        top = &share;
      }
    }
    if (top) {
      std::snprintf(buf, sizeof buf, "  top sub-category: %s %.1f%%\n", top->category.c_str(), top->fraction * 100.0);
      out += buf;
    }
  }
  return out;
}

std::string cluster_summary(const std::vector<SnippetRecord>& records, const std::vector<std::size_t>& assignments,
                            std::size_t k) {
  if (assignments.size() != records.size()) {
    throw UsageError("assignment count does not match record count");
  }
  std::string out;
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<const SnippetRecord*> members;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (assignments[i] == c) {
        members.push_back(&records[i]);
      }
    }
    std::map<std::string, std::size_t> labels;
    for (const auto* r : members) {
      ++labels[r->category ? r->category->label() : std::string("uncategorized")];
    }
    std::string dominant = "-";
    std::size_t best = 0;
    for (const auto& [label, count] : labels) {
      if (count > best) {
        best = count;
        dominant = label;
      }
    }
    out += "cluster " + std::to_string(c) + ": " + std::to_string(members.size()) + " snippets, mostly " + dominant +
           "\n";
    for (std::size_t i = 0; i < members.size() && i < 3; ++i) {
      out += "    " + members[i]->trace_id + "#" + std::to_string(members[i]->turn_index) + "  " +
             first_line(members[i]->code) + "\n";
    }
  }
  return out;
}

}  // namespace visloop
