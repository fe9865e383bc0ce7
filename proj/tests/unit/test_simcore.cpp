#include <gtest/gtest.h>

#include <cmath>
#include <queue>

#include "plume/error.hpp"
#include "plume/simcore.hpp"
#include "scenarios.hpp"

namespace sim = plume::sim;
namespace mesh = plume::mesh;
namespace geo = plume::geo;
using plume::testing::make_channel;

namespace {

sim::SimState uniform_state(std::size_t n, double p) {
  sim::SimState s;
  s.p.assign(n, p);
  s.s_g.assign(n, 0.0);
  return s;
}

sim::Schedule no_injection() {
  sim::Schedule s;
  s.injection_rate = 0.0;
  return s;
}

}  // namespace

TEST(RelPerm, Endpoints) {
  const sim::FluidProps f;
  EXPECT_DOUBLE_EQ(sim::relperm(sim::Phase::gas, 0.8, f), 0.95);
  EXPECT_DOUBLE_EQ(sim::relperm(sim::Phase::gas, 0.0, f), 0.0);
  EXPECT_DOUBLE_EQ(sim::relperm(sim::Phase::aqueous, 0.0, f), 1.0);
  EXPECT_DOUBLE_EQ(sim::relperm(sim::Phase::aqueous, 0.8, f), 0.0);
}

TEST(RelPerm, HandValue) {
  EXPECT_NEAR(sim::relperm(sim::Phase::gas, 0.4, {}), 0.2375, 1e-15);
}

TEST(RelPerm, AqueousBrooksCorey) {
  const sim::FluidProps f;
  const double s_a = 0.7;
  EXPECT_NEAR(sim::relperm(sim::Phase::aqueous, 1.0 - s_a, f), std::pow((s_a - 0.2) / 0.8, 6), 1e-15);
}

TEST(FractionalFlow, MonotoneFromZeroToOne) {
  const sim::FluidProps f;
  EXPECT_EQ(sim::gas_fractional_flow(0.0, f), 0.0);
  EXPECT_NEAR(sim::gas_fractional_flow(0.8, f), 1.0, 1e-15);
  double prev = 0.0;
  for (int k = 1; k <= 80; ++k) {
    const double v = sim::gas_fractional_flow(0.01 * k, f);
    EXPECT_GE(v, prev);
    prev = v;
  }
  EXPECT_GT(sim::max_fractional_flow_slope(f), 1.0);
}

TEST(Pressure, OneDimensionalLinearProfile) {
  const auto ch = make_channel(12);
  const std::size_t n = ch.mesh.num_cells();
  sim::DirichletSet d{{0, n - 1}, {1.0, 0.0}};
  auto sys = sim::make_flow_system(ch.mesh, ch.geomodel, {}, no_injection(), d);
  sys.well_cell.reset();
  const auto sol = sim::solve_pressure(sys, uniform_state(n, 0.0));
  const double x0 = ch.mesh.cells[0].centroid.x, x1 = ch.mesh.cells[n - 1].centroid.x;
  for (std::size_t i = 0; i < n; ++i) {
    const double expect = (x1 - ch.mesh.cells[i].centroid.x) / (x1 - x0);
    EXPECT_NEAR(sol.p[i], expect, 1e-10);
  }
}

TEST(Pressure, UniformDirichletNoSources) {
  const auto m = mesh::build_cartesian_mesh(5, 4, 100, 80);
  const auto g = geo::make_geomodel(m, 7, m.cells[7].centroid, std::vector<double>(20, 1e-13));
  auto sched = no_injection();
  sched.boundary_pressure = 3e6;
  const auto sys = sim::make_flow_system(m, g, {}, sched);
  const auto sol = sim::solve_pressure(sys, uniform_state(20, 3e6));
  for (double p : sol.p) EXPECT_NEAR(p, 3e6, 1e-6);
}

TEST(Pressure, SealedSideKeepsInitialPressure) {
  const auto m = mesh::build_cartesian_mesh(4, 1, 4, 1, {{{2.0, -1.0}, {2.0, 2.0}}});
  const auto g = geo::make_geomodel(m, 0, m.cells[0].centroid, std::vector<double>(4, 1e-13));
  sim::Schedule s;
  s.injection_rate = 1e-3;
  const auto sys = sim::make_flow_system(m, g, {}, s, sim::DirichletSet{{1}, {1e7}});
  auto st = uniform_state(4, 1e7);
  st.p[2] = 1.2e7;
  st.p[3] = 1.2e7;
  const auto sol = sim::solve_pressure(sys, st);
  EXPECT_EQ(sol.p[2], 1.2e7);
  EXPECT_EQ(sol.p[3], 1.2e7);
  EXPECT_GT(sol.p[0], 1e7);
}

TEST(Pressure, NoDirichletIsIllPosed) {
  const auto ch = make_channel(3);
  const auto sys = sim::make_flow_system(ch.mesh, ch.geomodel, {}, no_injection(), sim::DirichletSet{});
  EXPECT_THROW(sim::solve_pressure(sys, uniform_state(3, 1e7)), plume::IllPosedProblem);
}

TEST(Pressure, InjectorIsNotDirichlet) {
  const auto m = mesh::build_cartesian_mesh(3, 3, 30, 30);
  const auto g = geo::make_geomodel(m, 0, m.cells[0].centroid, std::vector<double>(9, 1e-13));
  const auto d = sim::boundary_dirichlet(m, g, 1e7);
  EXPECT_EQ(d.cells.size(), 7u);
  for (std::size_t c : d.cells) EXPECT_NE(c, 0u);
}

TEST(Saturation, NoDrivingForceNoChange) {
  const auto ch = make_channel(5);
  auto sys = sim::make_flow_system(ch.mesh, ch.geomodel, {}, no_injection(), sim::DirichletSet{{4}, {1e7}});
  sys.well_cell.reset();
  auto st = uniform_state(5, 1e7);
  st.s_g = {0.3, 0.1, 0.0, 0.5, 0.2};
  const auto before = st.s_g;
  const auto flow = sim::solve_pressure(sys, st);
  sim::advance_saturation(sys, st, flow, 86400.0);
  EXPECT_EQ(st.s_g, before);
}

TEST(Saturation, InjectionFillsWellCellFirst) {
  const auto m = mesh::build_cartesian_mesh(2, 1, 2, 1);
  const auto g = geo::make_geomodel(m, 0, m.cells[0].centroid, {1e-13, 1e-13});
  sim::Schedule s;
  s.injection_rate = 1e-6;
  auto sys = sim::make_flow_system(m, g, {}, s, sim::DirichletSet{{1}, {1e7}});
  sys.cfl = 1.0;
  auto st = uniform_state(2, 1e7);
  const auto flow = sim::solve_pressure(sys, st);
  const double dt = 0.1 * sys.pore_volume[0] / sys.well_rate;
  const auto rep = sim::advance_saturation(sys, st, flow, dt);
  ASSERT_EQ(rep.substeps, 1u);
  EXPECT_NEAR(st.s_g[0], 0.1, 1e-14);
  EXPECT_EQ(st.s_g[1], 0.0);
}

TEST(Simulation, ZeroInjectionKeepsInitialState) {
  const auto ch = make_channel(6);
  const auto r = sim::run_simulation(ch.mesh, ch.geomodel, {}, no_injection());
  ASSERT_EQ(r.snapshots.size(), 20u);
  for (const auto& s : r.snapshots) {
    for (double v : s.s_g) EXPECT_EQ(v, 0.0);
    for (double p : s.p) EXPECT_NEAR(p, 1e7, 1e-6);
  }
}

TEST(Simulation, InitialSnapshotIsTenMegapascal) {
  const auto ch = make_channel(6);
  sim::Schedule s;
  s.report_steps = 2;
  const auto r = sim::run_simulation(ch.mesh, ch.geomodel, {}, s);
  for (double p : r.snapshots[0].p) EXPECT_EQ(p, 10e6);
  EXPECT_EQ(r.snapshots.size(), 3u);
}

TEST(Simulation, VolumeBalancePerStep) {
  const plume::Box box{1000, 1000};
  const auto seeds = mesh::jittered_grid_seeds(box, 16, 16, 0.3, 21);
  std::size_t well = 0;
  const auto m = mesh::build_voronoi_mesh(seeds, box, {{{100, 300}, {400, 600}}, {{400, 500}, {800, 800}}},
                                          {480, 530}, {}, &well);
  const auto g = geo::make_geomodel(m, well, {480, 530}, geo::sample_log_perm_field(m, {}, 21));
  const auto r = sim::run_simulation(m, g, {}, {});
  double total_in = 0.0;
  for (const auto& b : r.balance) {
    EXPECT_LT(b.relative_error(), 1e-8);
    total_in += b.injected;
  }
  double stored = 0.0;
  const auto sys = sim::make_flow_system(m, g, {}, {});
  for (std::size_t i = 0; i < m.num_cells(); ++i) stored += sys.pore_volume[i] * r.snapshots.back().s_g[i];
  EXPECT_GT(total_in, 0.0);
  EXPECT_LE(stored, total_in * (1.0 + 1e-12));
  for (const auto& snap : r.snapshots) {
    for (double v : snap.s_g) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 0.8);
    }
  }
}

TEST(Simulation, UnreachableCellsStayDry) {
  const plume::Box box{1000, 1000};
  const auto seeds = mesh::jittered_grid_seeds(box, 14, 14, 0.3, 5);
  std::size_t well = 0;
  const auto m = mesh::build_voronoi_mesh(seeds, box, {{{650, 0}, {650, 1000}}}, {500, 500}, {}, &well);
  const auto g = geo::make_geomodel(m, well, {500, 500}, geo::sample_log_perm_field(m, {}, 5));
  const auto t = mesh::compute_transmissibilities(m, g.perm);
  std::vector<std::vector<std::size_t>> adj(m.num_cells());
  for (std::size_t f = 0; f < m.num_faces(); ++f) {
    if (t[f] > 0.0) {
      adj[m.faces[f].left].push_back(m.faces[f].right);
      adj[m.faces[f].right].push_back(m.faces[f].left);
    }
  }
  std::vector<bool> seen(m.num_cells(), false);
  std::queue<std::size_t> q;
  q.push(well);
  seen[well] = true;
  while (!q.empty()) {
    const std::size_t c = q.front();
    q.pop();
    for (std::size_t d : adj[c]) {
      if (!seen[d]) {
        seen[d] = true;
        q.push(d);
      }
    }
  }
  std::size_t unreachable = 0;
  const auto r = sim::run_simulation(m, g, {}, {});
  for (std::size_t i = 0; i < m.num_cells(); ++i) {
    if (seen[i]) continue;
    ++unreachable;
    for (const auto& snap : r.snapshots) EXPECT_EQ(snap.s_g[i], 0.0);
  }
  EXPECT_GT(unreachable, 20u);
}

TEST(Schedule, RejectsNegativeRate) {
  sim::Schedule s;
  s.injection_rate = -1.0;
  EXPECT_THROW(s.validate(), plume::InvalidArgument);
}
