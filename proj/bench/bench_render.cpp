// Copyright Contributors to the gsav Project
// SPDX-License-Identifier: Apache-2.0

// Compares the tiled OpenMP kernels against the serial reference.
// Thread counts sweep up to the number of available cores.

#include <gsav/oracle.hpp>
#include <gsav/parallel.hpp>
#include <gsav/raymap.hpp>
#include <gsav/renderer.hpp>

#include <benchmark/benchmark.h>

namespace {

using namespace gsav;

oracle::SyntheticScene bench_scene(int count, int size) {
    oracle::SceneDescriptor d;
    d.count = count;
    d.width = size;
    d.height = size;
    return oracle::make_scene(d, 7);
}

void thread_args(benchmark::internal::Benchmark* b) {
    const int max = parallel::max_threads();
    for (int size : {64, 256})
        for (int t = 1; t <= max; t *= 2) b->Args({size, t});
}

void BM_RenderParallel(benchmark::State& state) {
    const int size = int(state.range(0));
    parallel::set_num_threads(int(state.range(1)));
    const auto scene = bench_scene(500, size);
    for (auto _ : state) benchmark::DoNotOptimize(render(scene.cloud, scene.cameras[0], size, size));
    state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_RenderParallel)->Apply(thread_args)->Unit(benchmark::kMillisecond);

void BM_RenderSerialReference(benchmark::State& state) {
    const int size = int(state.range(0));
    const auto scene = bench_scene(500, size);
    for (auto _ : state) benchmark::DoNotOptimize(oracle::oracle_render(scene.cloud, scene.cameras[0], size, size));
    state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_RenderSerialReference)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_SalienceParallel(benchmark::State& state) {
    const int size = int(state.range(0));
    parallel::set_num_threads(int(state.range(1)));
    const auto scene = bench_scene(200, size);
    for (auto _ : state) benchmark::DoNotOptimize(splat_salience(scene.cloud, scene.cameras, size, size));
}
BENCHMARK(BM_SalienceParallel)->Apply(thread_args)->Unit(benchmark::kMillisecond);

void BM_SalienceFiniteDifference(benchmark::State& state) {
    const int size = int(state.range(0));
    const auto scene = bench_scene(20, size);
    for (auto _ : state)
        benchmark::DoNotOptimize(oracle::oracle_salience_fd(scene.cloud, scene.cameras, size, size, 1e-4));
}
BENCHMARK(BM_SalienceFiniteDifference)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_RayMap(benchmark::State& state) {
    const int size = int(state.range(0));
    parallel::set_num_threads(int(state.range(1)));
    const auto scene = bench_scene(1, size);
    for (auto _ : state)
        benchmark::DoNotOptimize(
            build_ray_map(scene.cameras[0], std::nullopt, size, size, EmbeddingKind::Sinusoidal));
}
BENCHMARK(BM_RayMap)->Apply(thread_args)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
