#include <benchmark/benchmark.h>
#include "stratbid/smoothing.hpp"
using namespace stratbid;
static void BM_placeholder(benchmark::State& state) { for (auto _ : state) benchmark::DoNotOptimize(1); }
BENCHMARK(BM_placeholder);
