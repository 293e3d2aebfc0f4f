#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

#include <gtest/gtest.h>
#include <visloop/errors.hpp>
#include <visloop/eval.hpp>

#include "support.hpp"

namespace visloop {
namespace {

using nlohmann::json;

TEST(Normalize, Rules) {
  EXPECT_EQ(normalize_answer("  The  Red\tCar. "), "the red car");
  EXPECT_EQ(normalize_answer("\"Cat\""), "cat");
  EXPECT_EQ(normalize_answer("'yes'!"), "yes");
  EXPECT_EQ(normalize_answer("\" a \"."), "a");
  EXPECT_EQ(normalize_answer(""), "");
}

TEST(ParseNumber, Literals) {
  EXPECT_EQ(parse_number("3"), 3.0);
  EXPECT_EQ(parse_number("-2.5"), -2.5);
  EXPECT_EQ(parse_number("+1e3"), 1000.0);
  EXPECT_EQ(parse_number("1/4"), 0.25);
  EXPECT_FALSE(parse_number("1/0"));
  EXPECT_FALSE(parse_number("abc"));
  EXPECT_FALSE(parse_number("3 apples"));
  EXPECT_FALSE(parse_number("inf"));
}

// Exact rationals: p/q printed as a fraction and as a long decimal must score
// equal; values apart by at least 1/(q1*q2) never do.
TEST(Score, RationalOracle) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 500; ++i) {
    const long long q = 1 + static_cast<long long>(rng() % 50);
    const long long p = static_cast<long long>(rng() % 2000) - 1000;
    char decimal[64];
    std::snprintf(decimal, sizeof decimal, "%.12f", static_cast<double>(p) / static_cast<double>(q));
    const std::string frac = std::to_string(p) + "/" + std::to_string(q);
    ASSERT_TRUE(score_answer(decimal, frac)) << decimal << " vs " << frac;

    const long long q2 = 1 + static_cast<long long>(rng() % 50);
    const long long p2 = static_cast<long long>(rng() % 2000) - 1000;
    const bool same = p * q2 == p2 * q;
    ASSERT_EQ(score_answer(frac, std::to_string(p2) + "/" + std::to_string(q2)), same) << frac << " " << p2 << "/" << q2;
  }
}

TEST(Score, Choices) {
  const std::vector<std::string> choices{"cat", "dog", "bird"};
  EXPECT_TRUE(score_answer("(B)", "B", choices));
  EXPECT_TRUE(score_answer("b)", "dog", choices));
  EXPECT_TRUE(score_answer("Dog.", "B", choices));
  EXPECT_FALSE(score_answer("A", "B", choices));
  EXPECT_FALSE(score_answer("D", "B", choices));
  // Without choices a letter is just text.
  EXPECT_FALSE(score_answer("(B)", "B"));
}

TEST(Dataset, ParsesAndResolvesPaths) {
  const auto items = load_dataset(testing::fixture("datasets/replay20.jsonl"));
  ASSERT_EQ(items.size(), 20u);
  EXPECT_EQ(items[2].id, "r03");
  ASSERT_TRUE(items[2].choices);
  EXPECT_EQ(items[2].choices->size(), 3u);
  EXPECT_TRUE(std::filesystem::exists(items[0].image_paths.at(0)));
}

TEST(Dataset, ErrorsCarryLineNumbers) {
  const auto base = testing::fixture("images");
  auto expect_schema = [&](const std::string& text, const std::string& needle) {
    try {
      parse_dataset(text, base);
      FAIL() << text;
    } catch (const SchemaError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_schema("\n{bad", "line 2");
  expect_schema(R"({"id":"a","question":"q"})", "'answer'");
  expect_schema(R"({"id":"a","question":"q","answer":"1","choices":[1]})", "'choices'");
  expect_schema("{\"id\":\"a\",\"question\":\"q\",\"answer\":1}\n{\"id\":\"a\",\"question\":\"q\",\"answer\":1}",
                "duplicate");
  EXPECT_THROW(parse_dataset(R"({"id":"a","question":"q","answer":"1","images":["missing.png"]})", base),
               MissingImage);
  const auto numeric = parse_dataset(R"({"id":"a","question":"q","answer":12})", base);
  EXPECT_EQ(numeric[0].answer, "12");
  EXPECT_THROW(load_dataset(base / "none.jsonl"), SchemaError);
}

ItemRecord rec(std::string id, bool correct, std::size_t blocks, bool fault = false) {
  ItemRecord r;
  r.id = std::move(id);
  r.correct = correct;
  r.n_code_blocks = blocks;
  r.fault = fault;
  return r;
}

TEST(Aggregate, PermutationInvariant) {
  std::mt19937_64 rng(2);
  std::vector<ItemRecord> records;
  for (int i = 0; i < 30; ++i) records.push_back(rec("i" + std::to_string(i), rng() % 2, rng() % 5, rng() % 7 == 0));
  const RunReport base = aggregate("d", EvalMode::Agent, records);
  for (int i = 0; i < 50; ++i) {
    std::shuffle(records.begin(), records.end(), rng);
    ASSERT_EQ(aggregate("d", EvalMode::Agent, records), base);
  }
  EXPECT_TRUE(std::is_sorted(base.per_item.begin(), base.per_item.end(),
                             [](const auto& a, const auto& b) { return a.id < b.id; }));
  EXPECT_EQ(report_from_json(report_to_json(base)), base);
}

TEST(Aggregate, EmptyAndTable) {
  const auto empty = aggregate("d", EvalMode::Cot, {});
  EXPECT_EQ(empty.accuracy, 0.0);
  const auto a = aggregate("vstar", EvalMode::Agent, {rec("1", true, 1), rec("2", true, 0), rec("3", false, 2), rec("4", true, 0)});
  const auto b = aggregate("vstar", EvalMode::Cot, {rec("1", true, 0), rec("2", false, 0), rec("3", false, 0), rec("4", true, 0)});
  EXPECT_EQ(table_row(a, "agent", &b), "| agent | vstar | agent | 75.0 | +25.0 |");
  EXPECT_EQ(table_row(b, "cot"), "| cot | vstar | cot | 50.0 | - |");
  EXPECT_EQ(histogram_csv(a), "block_count,items\n0,2\n1,1\n2,1\n");
}

std::vector<std::string> script_for(const json& doc, const std::string& id) {
  if (!doc["items"].contains(id)) return {};
  return doc["items"][id].get<std::vector<std::string>>();
}

// The 20-item corpus, with values counted by hand from the fixture layout.
TEST(Benchmark, Replay20HandComputedValues) {
  const auto items = load_dataset(testing::fixture("datasets/replay20.jsonl"));
  const json scripts = json::parse(testing::read_file(testing::fixture("scripts/replay20.json")));
  BenchmarkOptions opts;
  opts.dataset_id = "replay20";
  opts.parallelism = 4;
  opts.session.exec_timeout = Seconds{10};
  SupervisorConfig sc;
  sc.command = testing::mock_command();
  opts.kernels = supervisor_factory(sc);
  testing::TempDir out;
  opts.output_dir = out.path();
  // r20 has no script; building its client throws and the item is a fault.
  const auto report = run_benchmark(items, opts, [&](const DatasetItem& item) {
    return scripted_client(script_for(scripts, item.id));
  });
  EXPECT_EQ(report.n_items, 20u);
  EXPECT_DOUBLE_EQ(report.accuracy, 13.0 / 20.0);
  EXPECT_DOUBLE_EQ(report.pct_with_code, 14.0 / 20.0);
  const std::map<std::size_t, std::size_t> histogram{{0, 6}, {1, 7}, {2, 4}, {3, 2}, {4, 1}};
  EXPECT_EQ(report.code_histogram, histogram);
  EXPECT_EQ(report.n_faults, 1u);
  const std::vector<std::size_t> blocks{0, 2, 1, 3, 0, 1, 1, 2, 0, 4, 1, 0, 2, 1, 3, 0, 1, 2, 1, 0};
  for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(report.per_item[i].n_code_blocks, blocks[i]) << i;
  EXPECT_TRUE(std::filesystem::exists(out / "traces/r01.json"));
  EXPECT_EQ(report.per_item[0].trace_file, "traces/r01.json");

  write_report_files(report, out / "report", "agent");
  EXPECT_EQ(report_from_json(json::parse(testing::read_file(out / "report/report.json"))), report);
  EXPECT_TRUE(std::filesystem::exists(out / "report/histogram.csv"));
  EXPECT_TRUE(std::filesystem::exists(out / "report/table.txt"));
}

TEST(Benchmark, ParallelismDoesNotChangeTheReport) {
  const auto items = load_dataset(testing::fixture("datasets/replay5.jsonl"));
  const json scripts = json::parse(testing::read_file(testing::fixture("scripts/replay5_agent.json")));
  SupervisorConfig sc;
  sc.command = testing::mock_command();
  auto run = [&](std::size_t parallelism) {
    BenchmarkOptions opts;
    opts.dataset_id = "replay5";
    opts.parallelism = parallelism;
    opts.kernels = supervisor_factory(sc);
    return run_benchmark(items, opts, [&](const DatasetItem& item) { return scripted_client(script_for(scripts, item.id)); });
  };
  const auto one = run(1);
  EXPECT_EQ(run(3), one);
  EXPECT_DOUBLE_EQ(one.accuracy, 1.0);
}

TEST(Benchmark, CotModeAndOptionChecks) {
  const auto items = load_dataset(testing::fixture("datasets/replay5.jsonl"));
  const json scripts = json::parse(testing::read_file(testing::fixture("scripts/replay5_cot.json")));
  BenchmarkOptions opts;
  opts.dataset_id = "replay5";
  opts.mode = EvalMode::Cot;
  const auto report =
      run_benchmark(items, opts, [&](const DatasetItem& item) { return scripted_client(script_for(scripts, item.id)); });
  EXPECT_DOUBLE_EQ(report.accuracy, 0.4);
  EXPECT_DOUBLE_EQ(report.pct_with_code, 0.0);

  opts.parallelism = 0;
  EXPECT_THROW(run_benchmark(items, opts, {}), UsageError);
  opts.parallelism = 1;
  opts.mode = EvalMode::Agent;
  EXPECT_THROW(run_benchmark(items, opts, [](const DatasetItem&) { return scripted_client({"x"}); }), UsageError);
}

}  // namespace
}  // namespace visloop
