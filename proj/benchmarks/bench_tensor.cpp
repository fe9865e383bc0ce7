#include <benchmark/benchmark.h>

#include <random>

#include "plume/model.hpp"
#include "plume/tensor.hpp"
#include "scenarios.hpp"

namespace ad = plume::ad;

static void BM_MatmulForwardBackward(benchmark::State& state) {
  const auto n = state.range(0);
  std::mt19937_64 rng(1);
  const ad::Matrix a = plume::testing::random_matrix(n, 32, rng), w = plume::testing::random_matrix(32, 32, rng);
  for (auto _ : state) {
    ad::Tape t;
    const auto y = ad::sum_squares(ad::matmul(t.variable(a), t.variable(w)));
    t.backward(y);
    benchmark::DoNotOptimize(y.item());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_MatmulForwardBackward)->Arg(300)->Arg(3000);

static void BM_ScatterSum(benchmark::State& state) {
  const auto e = plume::testing::random_graph(static_cast<std::size_t>(state.range(0)), 0.02, 2);
  const auto dst = std::make_shared<const std::vector<std::size_t>>(e.dst);
  std::mt19937_64 rng(3);
  const ad::Matrix msg = plume::testing::random_matrix(static_cast<Eigen::Index>(e.dst.size()), 32, rng);
  for (auto _ : state) {
    ad::Tape t;
    const auto y = ad::scatter_sum(t.constant(msg), dst, static_cast<std::size_t>(state.range(0)));
    benchmark::DoNotOptimize(y.value().data());
  }
}
BENCHMARK(BM_ScatterSum)->Arg(300)->Arg(1000);

static void BM_ChebConv(benchmark::State& state) {
  const std::size_t n = 300, k = static_cast<std::size_t>(state.range(0));
  const auto e = plume::testing::random_graph(n, 0.02, 4);
  const auto g = plume::model::make_context(e.src, e.dst, n);
  std::mt19937_64 rng(5);
  const ad::Matrix x = plume::testing::random_matrix(n, 32, rng);
  const ad::Matrix w = plume::testing::random_matrix(static_cast<Eigen::Index>(k * 32), 32, rng);
  for (auto _ : state) {
    ad::Tape t;
    const auto y = plume::model::cheb_conv(t.constant(x), t.constant(w), g, k);
    benchmark::DoNotOptimize(y.value().data());
  }
}
BENCHMARK(BM_ChebConv)->Arg(4)->Arg(8);
