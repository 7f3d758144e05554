// OpenMP kernels against their serial references. Run with
// OMP_NUM_THREADS=n to see scaling; both variants produce identical bits.

#include <benchmark/benchmark.h>

#include "ltc/kernels.hpp"
#include "ltc/rng.hpp"
#include "ltc/trainer.hpp"

namespace {

ltc::Matrix gaussian(std::size_t r, std::size_t c, std::uint64_t seed) {
    ltc::Rng rng(seed);
    ltc::Matrix m(r, c);
    for (double& v : m.flat()) v = rng.normal();
    return m;
}

template <ltc::Matrix (*Fn)(const ltc::Matrix&, const ltc::Matrix&)>
void bm_matmul(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const ltc::Matrix a = gaussian(n, n, 1), b = gaussian(n, n, 2);
    for (auto _ : state) benchmark::DoNotOptimize(Fn(a, b));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}

template <ltc::Matrix (*Fn)(const ltc::Matrix&, const ltc::Matrix&)>
void bm_matmul_tn(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const ltc::Matrix a = gaussian(n, n, 3), b = gaussian(n, n, 4);
    for (auto _ : state) benchmark::DoNotOptimize(Fn(a, b));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}

void bm_recall(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const ltc::Matrix e = gaussian(n, 64, 5);
    ltc::Rng rng(6);
    std::vector<std::size_t> y(n);
    for (auto& v : y) v = rng.below(20);
    for (auto _ : state) benchmark::DoNotOptimize(ltc::recall_at_k(e, y, {1, 2, 4, 8}));
}

} // namespace

BENCHMARK(bm_matmul<ltc::matmul>)->Name("matmul/omp")->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(bm_matmul<ltc::serial::matmul>)->Name("matmul/serial")->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(bm_matmul_tn<ltc::matmul_tn>)->Name("matmul_tn/omp")->Arg(256);
BENCHMARK(bm_matmul_tn<ltc::serial::matmul_tn>)->Name("matmul_tn/serial")->Arg(256);
BENCHMARK(bm_matmul<ltc::matmul_nt>)->Name("matmul_nt/omp")->Arg(256);
BENCHMARK(bm_matmul<ltc::serial::matmul_nt>)->Name("matmul_nt/serial")->Arg(256);
BENCHMARK(bm_recall)->Name("recall_at_k")->Arg(1000)->Arg(4000);

BENCHMARK_MAIN();
