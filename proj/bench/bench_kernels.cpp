// OpenMP kernels against their serial references. Thread count from CONEWALK_THREADS.

#include "conewalk/green.hpp"
#include "conewalk/ladder.hpp"
#include "conewalk/montecarlo.hpp"
#include "conewalk/parallel.hpp"

#include <benchmark/benchmark.h>

#include <memory>

using namespace conewalk;

namespace {

StepDistribution product_walk() {
    Rational q(1, 4);
    return StepDistribution::from_rationals({{{1, 1}, q}, {{1, -1}, q}, {{-1, 1}, q}, {{-1, -1}, q}});
}

ConeRegion quadrant() { return ConeRegion(std::vector<Point>{{1, 0}, {0, 1}}); }

void BM_kernel_parallel(benchmark::State& st) {
    auto w = std::make_shared<const StateWindow>(quadrant(), static_cast<int>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(build_killed_kernel(product_walk(), quadrant(), w).rows().nonZeros());
    st.counters["states"] = w->size();
}

void BM_kernel_serial(benchmark::State& st) {
    auto w = std::make_shared<const StateWindow>(quadrant(), static_cast<int>(st.range(0)));
    for (auto _ : st)
        benchmark::DoNotOptimize(build_killed_kernel_serial(product_walk(), quadrant(), w).rows().nonZeros());
    st.counters["states"] = w->size();
}

void BM_ladder_parallel(benchmark::State& st) {
    WindowModel m = make_model(product_walk(), quadrant(), static_cast<int>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(ladder_kernel(m).max_row_sum);
}

void BM_ladder_serial(benchmark::State& st) {
    WindowModel m = make_model(product_walk(), quadrant(), static_cast<int>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(ladder_kernel_serial(m).max_row_sum);
}

const std::vector<Point> kStarts = {{0, 0}, {1, 1}, {2, 5}, {4, 4}, {7, 3}, {8, 8}, {3, 9}, {10, 1}};

void BM_survival_parallel(benchmark::State& st) {
    int n = static_cast<int>(st.range(0));
    KilledKernel k = build_killed_kernel(product_walk(), quadrant(), n + 12);
    for (auto _ : st) benchmark::DoNotOptimize(survival_sequences(k, kStarts, n).size());
}

void BM_survival_serial(benchmark::State& st) {
    int n = static_cast<int>(st.range(0));
    KilledKernel k = build_killed_kernel(product_walk(), quadrant(), n + 12);
    for (auto _ : st) benchmark::DoNotOptimize(survival_sequences_serial(k, kStarts, n).size());
}

void BM_ladder_mc(benchmark::State& st) {
    for (auto _ : st)
        benchmark::DoNotOptimize(
            empirical_ladder_law(product_walk(), quadrant(), Point{1, 1}, st.range(0), 100000, 1).theta);
}

}  // namespace

BENCHMARK(BM_kernel_parallel)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_kernel_serial)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ladder_parallel)->Arg(48)->Arg(96)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ladder_serial)->Arg(48)->Arg(96)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_survival_parallel)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_survival_serial)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ladder_mc)->Arg(20000)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
    apply_thread_config();
    benchmark::Initialize(&argc, argv);
    if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}
