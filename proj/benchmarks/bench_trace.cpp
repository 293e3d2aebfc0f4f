#include <benchmark/benchmark.h>
#include <visloop/base64.hpp>
#include <visloop/trace_io.hpp>

namespace {

using namespace visloop;

SessionTrace sample_trace(int turns, std::uint32_t side) {
  SessionTrace t;
  t.trace_id = "bench";
  t.benchmark_id = "bench";
  t.query = "How many red squares are in the picture?";
  t.images.push_back(ImageBlob::solid(side, side, 200, 30, 30));
  for (int i = 0; i < turns; ++i) {
    Turn turn;
    turn.index = static_cast<std::size_t>(i);
    turn.model_text = "<code>\n```python\nprint(image_clue_0.size)\n```\n</code>";
    turn.code_blocks.push_back("print(image_clue_0.size)\n");
    ExecResult r;
    r.stdout_text = "(" + std::to_string(side) + ", " + std::to_string(side) + ")\n";
    r.wall_time = 0.01;
    turn.exec_results.push_back(r);
    turn.clue_message = Message(Role::User, {ContentPart::text(r.stdout_text)});
    t.turns.push_back(std::move(turn));
  }
  Turn last;
  last.index = static_cast<std::size_t>(turns);
  last.model_text = "<answer>3</answer>";
  t.turns.push_back(std::move(last));
  t.termination = Termination::Answered;
  t.final_answer = "3";
  return t;
}

void BM_SerializeTrace(benchmark::State& state) {
  const auto t = sample_trace(static_cast<int>(state.range(0)), 256);
  for (auto _ : state) benchmark::DoNotOptimize(serialize_trace(t));
}
BENCHMARK(BM_SerializeTrace)->Arg(1)->Arg(8);

void BM_DeserializeTrace(benchmark::State& state) {
  const std::string doc = serialize_trace(sample_trace(static_cast<int>(state.range(0)), 256));
  for (auto _ : state) benchmark::DoNotOptimize(deserialize_trace(doc));
  state.SetBytesProcessed(state.iterations() * static_cast<int64_t>(doc.size()));
}
BENCHMARK(BM_DeserializeTrace)->Arg(1)->Arg(8);

void BM_Base64Encode(benchmark::State& state) {
  const std::vector<std::uint8_t> data(static_cast<std::size_t>(state.range(0)), 0xA5);
  for (auto _ : state) benchmark::DoNotOptimize(base64_encode(data));
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Base64Encode)->Arg(1 << 10)->Arg(1 << 20);

}  // namespace
