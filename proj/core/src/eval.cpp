#include "visloop/eval.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "visloop/errors.hpp"

namespace visloop {
namespace {

using nlohmann::json;

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_decimal(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') {
    s.remove_prefix(1);
  }
  if (s.empty()) {
    return std::nullopt;
  }
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

bool numbers_equal(double a, double b) {
  if (a == b) {
    return true;
  }
  return std::fabs(a - b) <= 1e-6 * std::max(std::fabs(a), std::fabs(b));
}

// "b", "(b)", "b)" and "b." (already normalized) name option b.
std::optional<std::size_t> option_letter(std::string_view norm, std::size_t n_choices) {
  if (norm.size() == 3 && norm.front() == '(' && norm.back() == ')') {
    norm = norm.substr(1, 1);
  } else if (norm.size() == 2 && norm.back() == ')') {
    norm = norm.substr(0, 1);
  }
  if (norm.size() != 1 || norm[0] < 'a' || norm[0] > 'z') {
    return std::nullopt;
  }
  const auto index = static_cast<std::size_t>(norm[0] - 'a');
  if (index >= n_choices) {
    return std::nullopt;
  }
  return index;
}

std::optional<std::size_t> option_index(std::string_view norm, const std::vector<std::string>& choices) {
  if (auto letter = option_letter(norm, choices.size())) {
    return letter;
  }
  for (std::size_t i = 0; i < choices.size(); ++i) {
    if (normalize_answer(choices[i]) == norm) {
      return i;
    }
  }
  return std::nullopt;
}

bool plain_match(const std::string& a, const std::string& b) {
  if (a == b) {
    return true;
  }
  const auto x = parse_number(a);
  const auto y = parse_number(b);
  return x && y && numbers_equal(*x, *y);
}

std::string file_stem_for(const std::string& id) {
  std::string out;
  for (char c : id) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    out += keep ? c : '_';
  }
  if (out != id || out.empty() || out.front() == '.') {
    // Keep distinct ids distinct after sanitizing.
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : id) {
      h = (h ^ c) * 1099511628211ULL;
    }
    char buf[24];
    std::snprintf(buf, sizeof buf, "-%08llx", static_cast<unsigned long long>(h & 0xffffffffULL));
    out = "item" + std::string(out.empty() || out.front() == '.' ? "" : "_") + out + buf;
  }
  return out;
}

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", fraction * 100.0);
  return buf;
}

SessionTrace failed_item_trace(const DatasetItem& item, const BenchmarkOptions& options, const std::string& what) {
  SessionTrace trace;
  trace.trace_id = item.id;
  trace.benchmark_id = options.dataset_id;
  trace.query = item.question;
  trace.termination = Termination::Fault;
  trace.faults.push_back({std::nullopt, "item", what});
  trace.effective_config = options.session.to_json();
  trace.effective_config["mode"] = to_string(options.mode);
  return trace;
}

ItemRecord run_item(const DatasetItem& item, const BenchmarkOptions& options, const ClientFactory& clients) {
  SessionTrace trace;
  try {
    std::vector<ImageBlob> images;
    images.reserve(item.image_paths.size());
    for (const auto& path : item.image_paths) {
      images.push_back(ImageBlob::from_file(path));
    }
    auto client = clients(item);
    if (!client) {
      throw UsageError("client factory returned nothing for item " + item.id);
    }
    SessionOptions so = options.session_options;
    so.trace_id = item.id;
    so.benchmark_id = options.dataset_id;
    SessionResult result = options.mode == EvalMode::Agent
                               ? run_session(item.question, images, options.session, *client, options.kernels, so)
                               : run_cot(item.question, images, options.session, *client, so);
    trace = std::move(result.trace);
  } catch (const std::exception& e) {
    spdlog::warn("item {} failed: {}", item.id, e.what());
    trace = failed_item_trace(item, options, e.what());
  }

  ItemRecord record;
  record.id = item.id;
  record.gold = item.answer;
  record.predicted = trace.final_answer;
  record.correct = record.predicted && score_answer(*record.predicted, item.answer, item.choices);
  record.n_code_blocks = trace.total_code_blocks();
  record.n_turns = trace.turns.size();
  record.termination = trace.termination;
  record.fault = trace.termination == Termination::Fault;
  if (options.output_dir) {
    const std::string rel = "traces/" + file_stem_for(item.id) + ".json";
    write_trace_file(*options.output_dir / rel, trace, options.trace_format);
    record.trace_file = rel;
  }
  return record;
}

}  // namespace

std::vector<DatasetItem> parse_dataset(std::string_view text, const std::filesystem::path& base_dir) {
  std::vector<DatasetItem> items;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    const std::string where = "line " + std::to_string(line_no) + ": ";
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SchemaError(where + "not valid JSON (" + e.what() + ")");
    }
    if (!doc.is_object()) {
      throw SchemaError(where + "record is not an object");
    }
    auto need_string = [&](const char* key) {
      auto it = doc.find(key);
      if (it == doc.end() || !it->is_string()) {
        throw SchemaError(where + "'" + key + "' must be a string");
      }
      return it->get<std::string>();
    };
    DatasetItem item;
    item.id = need_string("id");
    if (item.id.empty()) {
      throw SchemaError(where + "'id' is empty");
    }
    item.question = need_string("question");
    auto answer = doc.find("answer");
    if (answer == doc.end() || !(answer->is_string() || answer->is_number())) {
      throw SchemaError(where + "'answer' must be a string or number");
    }
    item.answer = answer->is_string() ? answer->get<std::string>() : answer->dump();
    if (auto images = doc.find("images"); images != doc.end()) {
      if (!images->is_array()) {
        throw SchemaError(where + "'images' must be an array of paths");
      }
      for (const auto& entry : *images) {
        if (!entry.is_string()) {
          throw SchemaError(where + "'images' must be an array of paths");
        }
        std::filesystem::path p = entry.get<std::string>();
        if (p.is_relative()) {
          p = base_dir / p;
        }
        if (!std::filesystem::is_regular_file(p)) {
          throw MissingImage(where + "image not found: " + p.string());
        }
        item.image_paths.push_back(std::move(p));
      }
    }
    if (auto choices = doc.find("choices"); choices != doc.end() && !choices->is_null()) {
      if (!choices->is_array() || !std::all_of(choices->begin(), choices->end(), [](const json& c) {
            return c.is_string();
          })) {
        throw SchemaError(where + "'choices' must be an array of strings");
      }
      item.choices = choices->get<std::vector<std::string>>();
    }
    if (!seen.insert(item.id).second) {
      throw SchemaError(where + "duplicate id '" + item.id + "'");
    }
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<DatasetItem> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw SchemaError("cannot read dataset " + path.string());
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_dataset(text.str(), path.parent_path());
}

std::string normalize_answer(std::string_view text) {
  std::string s;
  bool pending_space = false;
  for (char c : trim(text)) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = true;
      continue;
    }
    if (pending_space && !s.empty()) {
      s += ' ';
    }
    pending_space = false;
    s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  bool changed = true;
  while (changed && !s.empty()) {
    changed = false;
    if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
      s = s.substr(1, s.size() - 2);
      changed = true;
    }
    while (!s.empty() && std::string_view(".,;:!?").find(s.back()) != std::string_view::npos) {
      s.pop_back();
      changed = true;
    }
    const auto t = trim(s);
    if (t.size() != s.size()) {
      s = std::string(t);
      changed = true;
    }
  }
  return s;
}

std::optional<double> parse_number(std::string_view text) {
  text = trim(text);
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) {
    return parse_decimal(text);
  }
  const auto num = parse_decimal(text.substr(0, slash));
  const auto den = parse_decimal(text.substr(slash + 1));
  if (!num || !den || *den == 0.0) {
    return std::nullopt;
  }
  return *num / *den;
}

bool score_answer(std::string_view predicted, std::string_view gold,
                  const std::optional<std::vector<std::string>>& choices) {
  const std::string p = normalize_answer(predicted);
  const std::string g = normalize_answer(gold);
  if (choices && !choices->empty()) {
    const auto pi = option_index(p, *choices);
    const auto gi = option_index(g, *choices);
    if (pi && gi) {
      return *pi == *gi;
    }
  }
  return plain_match(p, g);
}

std::string_view to_string(EvalMode mode) { return mode == EvalMode::Agent ? "agent" : "cot"; }

EvalMode eval_mode_from_string(std::string_view text) {
  if (text == "agent") return EvalMode::Agent;
  if (text == "cot") return EvalMode::Cot;
  throw UsageError("mode must be 'agent' or 'cot', got '" + std::string(text) + "'");
}

RunReport aggregate(std::string dataset_id, EvalMode mode, std::vector<ItemRecord> records) {
  std::sort(records.begin(), records.end(), [](const ItemRecord& a, const ItemRecord& b) { return a.id < b.id; });
  RunReport report;
  report.dataset_id = std::move(dataset_id);
  report.mode = mode;
  report.n_items = records.size();
  std::size_t correct = 0;
  std::size_t with_code = 0;
  for (const auto& r : records) {
    correct += r.correct ? 1 : 0;
    with_code += r.n_code_blocks > 0 ? 1 : 0;
    report.n_faults += r.fault ? 1 : 0;
    ++report.code_histogram[r.n_code_blocks];
  }
  if (report.n_items > 0) {
    report.accuracy = static_cast<double>(correct) / static_cast<double>(report.n_items);
    report.pct_with_code = static_cast<double>(with_code) / static_cast<double>(report.n_items);
  }
  report.per_item = std::move(records);
  return report;
}

json report_to_json(const RunReport& report) {
  json histogram = json::object();
  for (const auto& [blocks, count] : report.code_histogram) {
    histogram[std::to_string(blocks)] = count;
  }
  json items = json::array();
  for (const auto& r : report.per_item) {
    items.push_back({{"id", r.id},
                     {"predicted", r.predicted ? json(*r.predicted) : json(nullptr)},
                     {"gold", r.gold},
                     {"correct", r.correct},
                     {"n_code_blocks", r.n_code_blocks},
                     {"n_turns", r.n_turns},
                     {"fault", r.fault},
                     {"termination", std::string(to_string(r.termination))},
                     {"trace_file", r.trace_file}});
  }
  return {{"dataset_id", report.dataset_id},
          {"mode", std::string(to_string(report.mode))},
          {"n_items", report.n_items},
          {"accuracy", report.accuracy},
          {"pct_with_code", report.pct_with_code},
          {"n_faults", report.n_faults},
          {"code_histogram", histogram},
          {"per_item", items}};
}

RunReport report_from_json(const json& doc) {
  try {
    RunReport report;
    report.dataset_id = doc.at("dataset_id").get<std::string>();
    report.mode = eval_mode_from_string(doc.at("mode").get<std::string>());
    report.n_items = doc.at("n_items").get<std::size_t>();
    report.accuracy = doc.at("accuracy").get<double>();
    report.pct_with_code = doc.at("pct_with_code").get<double>();
    report.n_faults = doc.at("n_faults").get<std::size_t>();
    for (const auto& [key, value] : doc.at("code_histogram").items()) {
      report.code_histogram[std::stoul(key)] = value.get<std::size_t>();
    }
    for (const auto& item : doc.at("per_item")) {
      ItemRecord r;
      r.id = item.at("id").get<std::string>();
      if (!item.at("predicted").is_null()) {
        r.predicted = item.at("predicted").get<std::string>();
      }
      r.gold = item.at("gold").get<std::string>();
      r.correct = item.at("correct").get<bool>();
      r.n_code_blocks = item.at("n_code_blocks").get<std::size_t>();
      r.n_turns = item.at("n_turns").get<std::size_t>();
      r.fault = item.at("fault").get<bool>();
      r.termination = termination_from_string(item.at("termination").get<std::string>());
      r.trace_file = item.at("trace_file").get<std::string>();
      report.per_item.push_back(std::move(r));
    }
    return report;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed report: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw SchemaError("malformed report: bad histogram key");
  }
}

std::string table_header() {
  return "| method | dataset | mode | accuracy (%) | delta |\n|---|---|---|---|---|";
}

std::string table_row(const RunReport& report, std::string_view label, const RunReport* baseline) {
  std::string delta = "-";
  if (baseline) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%+.1f", (report.accuracy - baseline->accuracy) * 100.0);
    delta = buf;
  }
  return "| " + std::string(label) + " | " + report.dataset_id + " | " + std::string(to_string(report.mode)) +
         " | " + format_percent(report.accuracy) + " | " + delta + " |";
}

std::string histogram_csv(const RunReport& report) {
  std::string out = "block_count,items\n";
  for (const auto& [blocks, count] : report.code_histogram) {
    out += std::to_string(blocks) + "," + std::to_string(count) + "\n";
  }
  return out;
}

RunReport run_benchmark(const std::vector<DatasetItem>& items, const BenchmarkOptions& options,
                        const ClientFactory& clients) {
  if (options.parallelism < 1) {
    throw UsageError("parallelism must be at least 1");
  }
  if (!clients) {
    throw UsageError("no client factory given");
  }
  if (options.mode == EvalMode::Agent && !options.kernels) {
    throw UsageError("agent mode needs a kernel factory");
  }
  options.session.validate();
  if (options.output_dir) {
    std::filesystem::create_directories(*options.output_dir / "traces");
  }

  std::vector<ItemRecord> records(items.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < items.size(); i = next++) {
      records[i] = run_item(items[i], options, clients);
    }
  };
  const std::size_t n_threads = std::min(options.parallelism, std::max<std::size_t>(items.size(), 1));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) {
      pool.emplace_back(worker);
    }
    for (auto& th : pool) {
      th.join();
    }
  }
  return aggregate(options.dataset_id, options.mode, std::move(records));
}

void write_report_files(const RunReport& report, const std::filesystem::path& dir, std::string_view label,
                        const RunReport* baseline) {
  std::filesystem::create_directories(dir);
  auto write = [&](const char* name, const std::string& body) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) {
      throw UsageError("cannot write " + (dir / name).string());
    }
    out << body;
  };
  write("report.json", dump_json(report_to_json(report), 2) + "\n");
  write("histogram.csv", histogram_csv(report));
  write("table.txt", table_header() + "\n" + table_row(report, label, baseline) + "\n");
}

}  // namespace visloop
