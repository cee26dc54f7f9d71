#include <benchmark/benchmark.h>

#include "meandim/analysis.hpp"
#include "meandim/estimator.hpp"
#include "meandim/testfns.hpp"

using namespace meandim;

namespace {

void BM_MlpForwardBatch(benchmark::State& state) {
  const MLPModel m = build_mlp(3, {300, 50}, 1, Activation::ReLU, 1);
  const Dataset data = gen_dataset(ishigami_function(), static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(m.evaluate_batch(data.features()));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpForwardBatch)->Arg(256)->Arg(4096);

void BM_FiniteChanges(benchmark::State& state) {
  const auto m = build_mlp(3, {300, 50}, 1, Activation::ReLU, 1);
  const Dataset data = gen_dataset(ishigami_function(), 20001, 2);
  const auto pairs = sample_pairs(data, static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(compute_finite_changes(m, data, pairs, ExecOptions{1}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FiniteChanges)->Arg(1000)->Arg(20000)->Unit(benchmark::kMillisecond);

void BM_UStatisticIshigami(benchmark::State& state) {
  const auto f = ishigami_function();
  const auto g = f.as_predictor();
  const Dataset data = gen_dataset(f, 5000, 4);
  const auto rows = sample_base_rows(data.n_rows(), static_cast<std::size_t>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_total_indices_ustat(*g, data, rows, ExecOptions{1}));
}
BENCHMARK(BM_UStatisticIshigami)->Arg(250)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Lamd(benchmark::State& state) {
  const MLPModel m = build_mlp(3, {300, 50}, 1, Activation::ReLU, 1);
  const Dataset data = gen_dataset(ishigami_function(), 5001, 6);
  for (auto _ : state) benchmark::DoNotOptimize(lamd(m, data, 2000, 7, ExecOptions{1}));
}
BENCHMARK(BM_Lamd)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
