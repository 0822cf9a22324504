// OpenMP kernels against their serial references. Run with
// OMP_NUM_THREADS=<n> to vary the team size.

#include <benchmark/benchmark.h>

#include "pairadv/kernels.hpp"

namespace {

using namespace pairadv;

std::vector<double> rewards(std::size_t n) {
  Rng rng(1);
  std::vector<double> r(n);
  for (double& x : r) x = rng.normal();
  return r;
}

std::vector<PreferenceMatrix> matrices(std::size_t count, std::size_t g) {
  const auto r = rewards(count * g);
  std::vector<PreferenceMatrix> out;
  for (std::size_t k = 0; k < count; ++k) {
    out.push_back(PreferenceMatrix::from_rewards(std::span<const double>(r).subspan(k * g, g)));
  }
  return out;
}

template <bool Parallel>
void BM_GrpoAdvantage(benchmark::State& state) {
  const auto g = static_cast<std::size_t>(state.range(0));
  const auto r = rewards(g * 20000);
  for (auto _ : state) {
    auto out = Parallel ? batch_grpo_advantage(r, g, {}) : serial::batch_grpo_advantage(r, g, {});
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * 20000);
}

template <bool Parallel>
void BM_PairwiseAdvantage(benchmark::State& state) {
  const auto ds = matrices(20000, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto out = Parallel ? batch_pairwise_advantage(ds, {}) : serial::batch_pairwise_advantage(ds, {});
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * 20000);
}

template <bool Parallel>
void BM_Equivalence(benchmark::State& state) {
  const auto g = static_cast<std::size_t>(state.range(0));
  const auto r = rewards(g * 20000);
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? batch_equivalence_max_diff(r, g, {}) : serial::batch_equivalence_max_diff(r, g, {}));
  }
  state.SetItemsProcessed(state.iterations() * 20000);
}

template <bool Parallel>
void BM_VoteSimulation(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? simulate_vote_accuracy(0.8, m, 5000, Rng(3))
                                      : serial::simulate_vote_accuracy(0.8, m, 5000, Rng(3)));
  }
  state.SetItemsProcessed(state.iterations() * 5000);
}

BENCHMARK(BM_GrpoAdvantage<true>)->Arg(4)->Arg(16)->Name("grpo_advantage/omp");
BENCHMARK(BM_GrpoAdvantage<false>)->Arg(4)->Arg(16)->Name("grpo_advantage/serial");
BENCHMARK(BM_PairwiseAdvantage<true>)->Arg(4)->Arg(16)->Name("pairwise_advantage/omp");
BENCHMARK(BM_PairwiseAdvantage<false>)->Arg(4)->Arg(16)->Name("pairwise_advantage/serial");
BENCHMARK(BM_Equivalence<true>)->Arg(8)->Name("equivalence/omp");
BENCHMARK(BM_Equivalence<false>)->Arg(8)->Name("equivalence/serial");
BENCHMARK(BM_VoteSimulation<true>)->Arg(16)->Name("vote_simulation/omp");
BENCHMARK(BM_VoteSimulation<false>)->Arg(16)->Name("vote_simulation/serial");

}  // namespace

BENCHMARK_MAIN();
