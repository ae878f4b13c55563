#include "wicksell/asymptotics.hpp"
#include "wicksell/experiments.hpp"

#include <benchmark/benchmark.h>

using namespace wicksell;

namespace {

const WicksellModel& sec5()
{
  static const WicksellModel m(SquaredRadiusCdf::preset("paper-sec5"));
  return m;
}

// Study replicates at n = 1000.
void replicates(benchmark::State& state, Execution ex)
{
  const LengthBiasedSampler sampler(sec5().cdf());
  for (auto _ : state)
    benchmark::DoNotOptimize(run_replicates(sec5(), sampler, {2, 3}, 2.5, 1000,
                                            static_cast<std::size_t>(state.range(0)), 1, ex));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

// L_x slopes on a 400-cell grid; the covariance is built once.
void limit_paths(benchmark::State& state, Execution ex)
{
  static const auto grids = limit_grids(sec5(), {2, 3}, 2.5, 400, 50000, {1, 0});
  for (auto _ : state)
    benchmark::DoNotOptimize(sample_slopes(grids.lx, static_cast<std::size_t>(state.range(0)),
                                           {1, 0}, StreamPurpose::paths, LawId::Lx, 400, ex));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

} // namespace

BENCHMARK_CAPTURE(replicates, serial, Execution::serial)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(replicates, parallel, Execution::parallel)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(limit_paths, serial, Execution::serial)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(limit_paths, parallel, Execution::parallel)->Arg(2000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
