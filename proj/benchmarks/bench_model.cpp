#include <benchmark/benchmark.h>

#include "plume/model.hpp"
#include "plume/trainer.hpp"
#include "scenarios.hpp"

namespace model = plume::model;
namespace graph = plume::graph;

namespace {

model::ModelConfig bench_config(std::int64_t latent, model::Variant v) {
  return {static_cast<std::size_t>(latent), 4, 4, 9, 3, v};
}

}  // namespace

static void BM_ProcessorForward(benchmark::State& state) {
  const auto c = bench_config(state.range(0), model::Variant::mgn);
  const auto ps = model::init_params(c, 1);
  const auto s = plume::testing::synthetic_sample(300, 1, 2, graph::FeatureConfig::baseline, 0.02);
  for (auto _ : state) {
    plume::ad::Tape t;
    const model::Bound p(t, ps, false);
    const auto in = model::node_input(t, s, t.constant(s.targets.row(0).transpose()), nullptr);
    const auto lat = model::encode(p, in, t.constant(s.edge_in));
    const auto v = model::process(p, c, lat, s.graph);
    benchmark::DoNotOptimize(v.value().data());
  }
}
BENCHMARK(BM_ProcessorForward)->Arg(32)->Arg(100)->Unit(benchmark::kMillisecond);

static void BM_RolloutInference(benchmark::State& state) {
  const auto c = bench_config(32, model::Variant::mgn_lstm);
  const auto ps = model::init_params(c, 3);
  const auto s = plume::testing::synthetic_sample(300, 19, 4, graph::FeatureConfig::baseline, 0.02);
  const auto stats = plume::testing::unit_stats(19, graph::FeatureConfig::baseline);
  for (auto _ : state) {
    const auto r = model::rollout(ps, c, s, stats, 19);
    benchmark::DoNotOptimize(r.physical.data());
  }
}
BENCHMARK(BM_RolloutInference)->Unit(benchmark::kMillisecond);

static void BM_SequenceLossGrad(benchmark::State& state) {
  const auto c = bench_config(32, model::Variant::mgn_lstm);
  const auto ps = model::init_params(c, 5);
  const auto s = plume::testing::synthetic_sample(300, 11, 6, graph::FeatureConfig::baseline, 0.02);
  const auto stats = plume::testing::unit_stats(11, graph::FeatureConfig::baseline);
  for (auto _ : state) {
    const auto lg = plume::train::sequence_loss_grad(ps, c, {&s}, stats, 11);
    benchmark::DoNotOptimize(lg.loss);
  }
}
BENCHMARK(BM_SequenceLossGrad)->Unit(benchmark::kMillisecond);
