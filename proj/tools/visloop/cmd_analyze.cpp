#include <algorithm>
#include <iostream>

#include <spdlog/spdlog.h>
#include <visloop/errors.hpp>
#include <visloop/kmeans.hpp>
#include <visloop/trace_io.hpp>

#include "commands.hpp"

namespace visloop::cli {

namespace fs = std::filesystem;

namespace {

std::vector<fs::path> trace_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

int cmd_analyze(const CliConfig& cfg, const AnalyzeArgs& args) {
  if (!fs::is_directory(args.traces)) {
    spdlog::error("not a directory: {}", args.traces.string());
    return kExitData;
  }
  std::optional<RuleTable> custom_rules;
  if (args.rules) custom_rules = RuleTable::from_file(*args.rules);
  const RuleTable& rules = custom_rules ? *custom_rules : RuleTable::builtin();
  echo_config(cfg, "analyze");
  spdlog::info("analyze: cluster k = {}, seed = {}, embedder = {}", args.cluster_k, cfg.seed, cfg.embedder);

  std::vector<SessionTrace> traces;
  for (const auto& path : trace_files(args.traces)) {
    try {
      traces.push_back(read_trace_file(path));
    } catch (const Error& e) {
      spdlog::warn("skipping {}: {}", path.string(), e.what());
    }
  }
  if (traces.empty()) {
    spdlog::error("no trace documents under {}", args.traces.string());
    return kExitData;
  }

  std::vector<SnippetRecord> records = collect_snippets(traces);
  classify_records(records, rules);
  const auto report = distribution_report(records);
  const std::string csv = distribution_csv(report);
  std::string summary = distribution_summary(report);
  if (records.empty()) {
    summary = "notice: the " + std::to_string(traces.size()) + " traces contain no code snippets\n";
  }
  write_text(cfg.output_dir / "distribution.csv", csv);
  write_text(cfg.output_dir / "summary.txt", summary);
  std::cout << summary;

  if (args.cluster_k > 0) {
    if (args.cluster_k > records.size()) {
      throw UsageError("--cluster " + std::to_string(args.cluster_k) + " exceeds the " +
                       std::to_string(records.size()) + " snippets found");
    }
    if (cfg.embedder == "remote") {
      auto transport = make_default_transport();
      embed_remote(records, cfg.embedding(), *transport);
    } else {
      embed_lexical(records);
    }
    std::vector<Vector> points;
    for (const auto& r : records) points.push_back(*r.embedding);
    const KMeansResult km = kmeans(points, args.cluster_k, cfg.seed);
    std::string listing = "trace_id,turn_index,category,cluster\n";
    for (std::size_t i = 0; i < records.size(); ++i) {
      listing += records[i].trace_id + "," + std::to_string(records[i].turn_index) + "," +
                 records[i].category->label() + "," + std::to_string(km.assignments[i]) + "\n";
    }
    const std::string clusters = cluster_summary(records, km.assignments, args.cluster_k);
    write_text(cfg.output_dir / "clusters.csv", listing);
    write_text(cfg.output_dir / "clusters.txt", clusters);
    std::cout << "k-means (k=" << args.cluster_k << ", seed=" << cfg.seed << ", " << km.iterations
              << " iterations, inertia " << km.inertia() << ")\n"
              << clusters;
  }
  std::cout << "distribution: " << (cfg.output_dir / "distribution.csv").string() << std::endl;
  return kExitOk;
}

}  // namespace visloop::cli
