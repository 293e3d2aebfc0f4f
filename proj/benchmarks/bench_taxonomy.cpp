#include <random>

#include <benchmark/benchmark.h>
#include <visloop/kmeans.hpp>
#include <visloop/taxonomy.hpp>

namespace {

using namespace visloop;

const char* const kSnippets[] = {
    "crop = image_clue_0.crop((10, 10, 200, 200))\nplt.imshow(crop)\nplt.show()",
    "import cv2\nedges = cv2.Canny(np.array(image_clue_0), 50, 150)",
    "from PIL import ImageDraw\nd = ImageDraw.Draw(img)\nd.line([(0, 0), (100, 100)], fill='red')",
    "hist = image_clue_0.histogram()\nprint(max(hist))",
    "ratio = 3.2 / 1.6\nprint(round(ratio, 2))",
    "rot = image_clue_0.rotate(90, expand=True)",
};

void BM_ClassifySnippet(benchmark::State& state) {
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(classify_snippet(kSnippets[i++ % std::size(kSnippets)]));
}
BENCHMARK(BM_ClassifySnippet);

void BM_LexicalEmbedding(benchmark::State& state) {
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(lexical_embedding(kSnippets[i++ % std::size(kSnippets)]));
}
BENCHMARK(BM_LexicalEmbedding);

void BM_KMeans(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  std::vector<Vector> points(static_cast<std::size_t>(state.range(0)), Vector(kLexicalDim));
  for (auto& p : points) {
    for (auto& x : p) x = normal(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(kmeans(points, 8, 42));
}
BENCHMARK(BM_KMeans)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace
