#include <benchmark/benchmark.h>
#include <visloop/supervisor.hpp>

#ifdef VISLOOP_BENCH_MOCK_KERNEL

namespace {

using namespace visloop;

SupervisorConfig mock() {
  SupervisorConfig c;
  c.command = {VISLOOP_BENCH_MOCK_KERNEL};
  return c;
}

// Round trip of one exec frame through a live mock kernel.
void BM_MockExecRoundTrip(benchmark::State& state) {
  auto kernel = KernelSupervisor::spawn(mock());
  for (auto _ : state) benchmark::DoNotOptimize(kernel->exec("print(1 + 1)", Seconds{5}));
}
BENCHMARK(BM_MockExecRoundTrip)->Unit(benchmark::kMicrosecond);

void BM_MockSpawnAndHandshake(benchmark::State& state) {
  for (auto _ : state) {
    auto kernel = KernelSupervisor::spawn(mock());
    kernel->shutdown();
  }
}
BENCHMARK(BM_MockSpawnAndHandshake)->Unit(benchmark::kMillisecond);

}  // namespace

#endif
