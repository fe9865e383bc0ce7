#include <benchmark/benchmark.h>

#include "plume/geomodel.hpp"
#include "plume/mesh.hpp"
#include "plume/simcore.hpp"

namespace mesh = plume::mesh;
namespace geo = plume::geo;
namespace sim = plume::sim;

namespace {

const plume::Box kBox{1000, 1000};
const std::vector<plume::Segment> kFaults{{{100, 300}, {400, 600}}, {{400, 500}, {800, 800}}};

mesh::Mesh desk_mesh(std::size_t n, std::size_t* well) {
  const auto seeds = mesh::jittered_grid_seeds(kBox, n, n, 0.3, 7);
  return mesh::build_voronoi_mesh(seeds, kBox, kFaults, {480, 530}, {}, well);
}

}  // namespace

static void BM_VoronoiMesh(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    std::size_t well = 0;
    const auto m = desk_mesh(n, &well);
    benchmark::DoNotOptimize(m.cells.data());
  }
}
BENCHMARK(BM_VoronoiMesh)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

static void BM_PressureSolve(benchmark::State& state) {
  std::size_t well = 0;
  const auto m = desk_mesh(static_cast<std::size_t>(state.range(0)), &well);
  const auto g = geo::make_geomodel(m, well, {480, 530}, geo::sample_log_perm_field(m, {}, 8));
  const auto sys = sim::make_flow_system(m, g, {}, {});
  const sim::SimState st{std::vector<double>(m.num_cells(), 10e6), std::vector<double>(m.num_cells(), 0.0), 0.0};
  for (auto _ : state) {
    const auto sol = sim::solve_pressure(sys, st);
    benchmark::DoNotOptimize(sol.p.data());
  }
}
BENCHMARK(BM_PressureSolve)->Arg(16)->Arg(32)->Unit(benchmark::kMicrosecond);

static void BM_DeskSimulation(benchmark::State& state) {
  std::size_t well = 0;
  const auto m = desk_mesh(16, &well);
  const auto g = geo::make_geomodel(m, well, {480, 530}, geo::sample_log_perm_field(m, {}, 9));
  for (auto _ : state) {
    const auto r = sim::run_simulation(m, g, {}, {});
    benchmark::DoNotOptimize(r.snapshots.data());
  }
}
BENCHMARK(BM_DeskSimulation)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
