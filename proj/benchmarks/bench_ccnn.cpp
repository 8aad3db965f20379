#include <benchmark/benchmark.h>

#include "ccnn/nnkernel.hpp"
#include "ccnn/pipeline.hpp"
#include "ccnn/synthetic.hpp"

using namespace ccnn;

namespace {

CascadeModel bench_model() {
    CascadeModel m;
    m.specs = reference_specs();
    for (int k = 0; k < 3; ++k) m.weights[static_cast<std::size_t>(k)] = random_weights<float>(m.specs[static_cast<std::size_t>(k)], 17 + k);
    return m;
}

ImagePlane bench_frame(int w, int h) {
    SyntheticFaces gen(5);
    SceneConfig cfg;
    cfg.width = w;
    cfg.height = h;
    cfg.min_faces = 2;
    return gen.scene(cfg).image;
}

void BM_Stage1Dense(benchmark::State& state) {
    const auto m = bench_model();
    const auto img = normalize_intensity(bench_frame(static_cast<int>(state.range(0)), static_cast<int>(state.range(1))));
    for (auto _ : state) benchmark::DoNotOptimize(forward(img, m.specs[0], m.weights[0]));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(window_positions(img.size(), {27, 31}, 4)));
}
BENCHMARK(BM_Stage1Dense)->Args({320, 240})->Args({640, 480})->Unit(benchmark::kMillisecond);

void BM_ClassifyRegion(benchmark::State& state) {
    const auto m = bench_model();
    const auto patch = prepare_patch(bench_frame(200, 200), {0, 40, 40, 0.0f}, 1.0, {27, 31});
    for (auto _ : state) benchmark::DoNotOptimize(classify_region(patch, m, -1.0f, 1, DecisionRule::Strict));
}
BENCHMARK(BM_ClassifyRegion)->Unit(benchmark::kMicrosecond);

void BM_Pyramid(benchmark::State& state) {
    const auto img = bench_frame(640, 480);
    for (auto _ : state) benchmark::DoNotOptimize(build_pyramid(img, {27, 31}, 24, 1.1));
}
BENCHMARK(BM_Pyramid)->Unit(benchmark::kMillisecond);

void BM_Detect(benchmark::State& state) {
    const auto m = bench_model();
    const auto img = bench_frame(320, 240);
    DetectorParams p;
    p.minSize = 24;
    p.scaleFactor = 1.1;
    p.t1 = 0.9f;
    p.mode = static_cast<ExecutionMode>(state.range(0));
    PipelineOptions o;
    o.selectiveWorkers = o.poolA = o.poolB = 2;
    for (auto _ : state) benchmark::DoNotOptimize(run_pipeline(img, m, p, o));
    state.SetLabel(std::string(to_string(p.mode)));
}
BENCHMARK(BM_Detect)
    ->Arg(static_cast<int>(ExecutionMode::Sync))
    ->Arg(static_cast<int>(ExecutionMode::Async))
    ->Arg(static_cast<int>(ExecutionMode::Patchwork))
    ->Arg(static_cast<int>(ExecutionMode::Partitioned))
    ->UseRealTime()
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
