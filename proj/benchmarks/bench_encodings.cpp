#include <benchmark/benchmark.h>

#include "snakelab/encodings.hpp"
#include "snakelab/rng.hpp"
#include "snakelab/tree.hpp"

using namespace snakelab;

namespace {

// Deterministic comb-with-bushes tree, large enough to stress the encoders.
LabeledOrderedTree synthetic_tree(std::int64_t n) {
  std::vector<std::vector<std::int32_t>> kids(static_cast<std::size_t>(n));
  Rng rng(12345);
  std::int32_t next = 2;
  std::vector<std::int32_t> frontier{1};
  while (next <= n) {
    const std::int32_t v = frontier[std::size_t(rng.below(frontier.size()))];
    const int c = 1 + int(rng.below(3));
    for (int j = 0; j < c && next <= n; ++j) {
      kids[std::size_t(v - 1)].push_back(next);
      frontier.push_back(next);
      ++next;
    }
  }
  return LabeledOrderedTree::from_child_lists(1, kids);
}

void bench_encode_all(benchmark::State& state) {
  const auto t = synthetic_tree(state.range(0));
  for (auto _ : state) {
    auto p = encode_all(t);
    benchmark::DoNotOptimize(p.W.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void bench_preorder(benchmark::State& state) {
  const auto t = synthetic_tree(state.range(0));
  for (auto _ : state) {
    auto o = t.preorder();
    benchmark::DoNotOptimize(o.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(bench_encode_all)->Arg(1 << 14)->Arg(1 << 17);
BENCHMARK(bench_preorder)->Arg(1 << 14)->Arg(1 << 17);
