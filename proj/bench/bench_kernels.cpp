#include <benchmark/benchmark.h>

#include "xbarsim/kernels.hpp"
#include "xbarsim/rng.hpp"

using namespace xbarsim;

namespace {

WeightMatrix random_weights(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    CounterRng rng(seed);
    Matrix m(rows, cols);
    for (auto& v : m.data) {
        v = rng.uniform(-1.0, 1.0);
    }
    return WeightMatrix::from(m);
}

Matrix random_inputs(std::size_t n, std::size_t width, std::uint64_t seed) {
    CounterRng rng(seed);
    Matrix m(n, width);
    for (auto& v : m.data) {
        v = rng.uniform();
    }
    return m;
}

MappedLayer calibrated_layer(std::size_t size) {
    EngineConfig engine;
    MappedLayer layer = map_layer(random_weights(size, size, 1), 1.0 / 50.0, 1.0 / 1000.0, engine);
    calibrate_layer(layer, random_inputs(32, size, 2), 3);
    return layer;
}

void BM_MappedReference(benchmark::State& state) {
    const auto size = static_cast<std::size_t>(state.range(0));
    const MappedLayer layer = calibrated_layer(size);
    const Matrix x = random_inputs(256, size, 4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(reference::mapped_mvm_batch(layer, x));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.rows));
}

void BM_MappedParallel(benchmark::State& state) {
    const auto size = static_cast<std::size_t>(state.range(0));
    const MappedLayer layer = calibrated_layer(size);
    const Matrix x = random_inputs(256, size, 4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(mapped_mvm_batch(layer, x));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.rows));
}

void BM_DigitalReference(benchmark::State& state) {
    const auto size = static_cast<std::size_t>(state.range(0));
    const WeightMatrix w = random_weights(size, size, 1);
    const Matrix x = random_inputs(256, size, 4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(reference::digital_mvm_batch(w, x));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.rows));
}

void BM_DigitalParallel(benchmark::State& state) {
    const auto size = static_cast<std::size_t>(state.range(0));
    const WeightMatrix w = random_weights(size, size, 1);
    const Matrix x = random_inputs(256, size, 4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(digital_mvm_batch(w, x));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.rows));
}

}  // namespace

BENCHMARK(BM_MappedReference)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MappedParallel)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DigitalReference)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DigitalParallel)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
