#include <string>

#include <benchmark/benchmark.h>
#include <visloop/tags.hpp>

namespace {

std::string reply_with_blocks(int blocks) {
  std::string text = "Let me look at the image more closely.\n";
  for (int i = 0; i < blocks; ++i) {
    text += "<code>\n```python\ncrop = image_clue_0.crop((0, 0, 64, 64))\nprint(crop.size, " + std::to_string(i) +
            ")\n```\n</code>\n";
  }
  return text;
}

void BM_ExtractCodeBlocks(benchmark::State& state) {
  const std::string text = reply_with_blocks(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(visloop::extract_code_blocks(text));
  state.SetBytesProcessed(state.iterations() * static_cast<int64_t>(text.size()));
}
BENCHMARK(BM_ExtractCodeBlocks)->Arg(1)->Arg(4)->Arg(32);

void BM_ExtractBoxedNested(benchmark::State& state) {
  std::string text = "so the result is \\boxed{";
  for (int i = 0; i < state.range(0); ++i) text += "\\frac{1}{";
  for (int i = 0; i < state.range(0); ++i) text += "2}";
  text += "}.";
  for (auto _ : state) benchmark::DoNotOptimize(visloop::extract_boxed(text));
}
BENCHMARK(BM_ExtractBoxedNested)->Arg(4)->Arg(64)->Arg(1024);

void BM_ClassifyReply(benchmark::State& state) {
  const std::string text = reply_with_blocks(2) + "<answer>B</answer>";
  for (auto _ : state) benchmark::DoNotOptimize(visloop::classify(text));
}
BENCHMARK(BM_ClassifyReply);

}  // namespace
