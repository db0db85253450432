#include <random>

#include <benchmark/benchmark.h>

#include "melmine/contrastive.hpp"
#include "melmine/cvacpt.hpp"
#include "melmine/minhash.hpp"

using namespace melmine;

namespace {

// Entities drawn from a shared vocabulary with 2..12 attributes each.
KnowledgeBase random_kb(std::size_t n, std::size_t vocab, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Entity> es(n);
  for (std::size_t i = 0; i < n; ++i) {
    es[i].id = "e" + std::to_string(i);
    const std::size_t size = 2 + rng() % 11;
    for (std::size_t a = 0; a < size; ++a) es[i].attributes.push_back("t" + std::to_string(rng() % vocab));
  }
  return build_kb(es);
}

void BM_ExactTable(benchmark::State& state) {
  const auto kb = random_kb(static_cast<std::size_t>(state.range(0)), 2000, 1);
  for (auto _ : state) benchmark::DoNotOptimize(build_exact_table(kb, 10));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ExactTable)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_ApproxTable(benchmark::State& state) {
  const auto kb = random_kb(static_cast<std::size_t>(state.range(0)), 2000, 1);
  for (auto _ : state) {
    const auto index = build_minhash_index(kb, MinHashConfig{});
    benchmark::DoNotOptimize(build_approx_table(kb, 10, index));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ApproxTable)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_ContrastiveLoss(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  std::vector<double> scores(static_cast<std::size_t>(state.range(0)));
  for (auto& s : scores) s = g(rng);
  for (auto _ : state) benchmark::DoNotOptimize(contrastive_loss(scores));
}
BENCHMARK(BM_ContrastiveLoss)->Arg(5)->Arg(65);

void BM_Transform(benchmark::State& state) {
  const std::size_t d = static_cast<std::size_t>(state.range(0)), patches = 49;
  std::mt19937_64 rng(3);
  std::normal_distribution<float> g;
  FeatureBundle in;
  in.global.resize(d);
  for (auto& x : in.global) x = g(rng);
  in.local = RowMatrix<float>(patches, d);
  for (std::size_t r = 0; r < patches; ++r) {
    for (std::size_t c = 0; c < d; ++c) in.local(r, c) = g(rng);
  }
  std::vector<double> context(d);
  for (auto& x : context) x = g(rng);
  const auto params = init_params(d, 4);
  for (auto _ : state) benchmark::DoNotOptimize(transform(in, context, params));
}
BENCHMARK(BM_Transform)->Arg(96)->Arg(512)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
