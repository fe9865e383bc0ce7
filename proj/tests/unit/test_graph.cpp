#include <gtest/gtest.h>

#include <cmath>

#include "plume/error.hpp"
#include "plume/graph.hpp"
#include "scenarios.hpp"

namespace graph = plume::graph;
namespace mesh = plume::mesh;
namespace geo = plume::geo;
namespace sim = plume::sim;

namespace {

std::vector<sim::SimState> flat_snapshots(std::size_t n, std::size_t steps, double s) {
  std::vector<sim::SimState> out;
  for (std::size_t k = 0; k <= steps; ++k) out.push_back({std::vector<double>(n, 1e7), std::vector<double>(n, s), 0});
  return out;
}

struct Desk {
  mesh::Mesh mesh;
  geo::GeoModel geomodel;
  std::vector<sim::SimState> snapshots;
};

Desk desk_run(std::uint64_t seed, std::size_t steps = 6) {
  Desk d;
  const plume::Box box{1000, 1000};
  const auto seeds = mesh::jittered_grid_seeds(box, 12, 12, 0.3, seed);
  std::size_t well = 0;
  const plume::Point2 w = geo::sample_well_location(box, seed);
  d.mesh = mesh::build_voronoi_mesh(seeds, box, {{{100, 300}, {400, 600}}, {{400, 500}, {800, 800}}}, w, {}, &well);
  d.geomodel = geo::make_geomodel(d.mesh, well, w, geo::sample_log_perm_field(d.mesh, {}, seed));
  sim::Schedule s;
  s.report_steps = steps;
  d.snapshots = sim::run_simulation(d.mesh, d.geomodel, {}, s).snapshots;
  return d;
}

graph::GraphSample desk_sample(std::uint64_t seed, graph::FeatureConfig f) {
  const Desk d = desk_run(seed);
  const auto t = mesh::compute_transmissibilities(d.mesh, d.geomodel.perm);
  return graph::mesh_to_graph(d.mesh, &t, d.geomodel, d.snapshots, f, graph::Variable::saturation);
}

}  // namespace

TEST(MeshToGraph, TwoCellsOneConductingFace) {
  const auto m = mesh::build_cartesian_mesh(2, 1, 2, 1);
  const auto g = geo::make_geomodel(m, 0, m.cells[0].centroid, {1e-13, 1e-13});
  const auto s = graph::mesh_to_graph(m, nullptr, g, flat_snapshots(2, 1, 0.0), graph::FeatureConfig::baseline,
                                      graph::Variable::saturation);
  EXPECT_EQ(s.n_cells, 2u);
  ASSERT_EQ(s.n_edges(), 2u);
  EXPECT_EQ(s.src[0], s.dst[1]);
  EXPECT_EQ(s.dst[0], s.src[1]);
  EXPECT_DOUBLE_EQ(std::abs(s.edge_features(0, 0)), 1.0);
  EXPECT_DOUBLE_EQ(s.edge_features(0, 2), 1.0);
  EXPECT_DOUBLE_EQ(s.edge_features(0, 0), -s.edge_features(1, 0));
}

TEST(MeshToGraph, FaultSeversTheEdge) {
  const auto m = mesh::build_cartesian_mesh(2, 1, 2, 1, {{{1.0, -1.0}, {1.0, 2.0}}});
  const auto g = geo::make_geomodel(m, 0, m.cells[0].centroid, {1e-13, 1e-13});
  const auto t = mesh::compute_transmissibilities(m, g.perm);
  for (const mesh::TransmissibilityMap* tp : {static_cast<const mesh::TransmissibilityMap*>(nullptr), &t}) {
    const auto s = graph::mesh_to_graph(m, tp, g, flat_snapshots(2, 1, 0.0), graph::FeatureConfig::baseline,
                                        graph::Variable::saturation);
    EXPECT_EQ(s.n_cells, 2u);
    EXPECT_EQ(s.n_edges(), 0u);
  }
}

TEST(MeshToGraph, ChannelWidths) {
  EXPECT_EQ(graph::kStaticChannels, 8u);
  EXPECT_EQ(graph::node_input_width(graph::FeatureConfig::baseline), 9u);
  EXPECT_EQ(graph::node_input_width(graph::FeatureConfig::relperm), 10u);
  EXPECT_EQ(graph::edge_input_width(graph::FeatureConfig::baseline), 3u);
  EXPECT_EQ(graph::edge_input_width(graph::FeatureConfig::transmissibility), 4u);
  EXPECT_EQ(graph::edge_input_width(graph::FeatureConfig::both), 4u);
}

TEST(MeshToGraph, StaticChannelsAndTransmissibility) {
  const Desk d = desk_run(3, 2);
  const auto t = mesh::compute_transmissibilities(d.mesh, d.geomodel.perm);
  const auto s = graph::mesh_to_graph(d.mesh, &t, d.geomodel, d.snapshots, graph::FeatureConfig::transmissibility,
                                      graph::Variable::pressure);
  ASSERT_EQ(s.node_static.cols(), 8);
  ASSERT_EQ(s.edge_features.cols(), 4);
  for (std::size_t i = 0; i < s.n_cells; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    EXPECT_DOUBLE_EQ(s.node_static(r, 0), d.geomodel.perm[i] / geo::kMilliDarcy);
    EXPECT_DOUBLE_EQ(s.node_static(r, 1), d.mesh.cells[i].volume);
    EXPECT_DOUBLE_EQ(s.node_static.row(r).tail(4).sum(), 1.0);
  }
  for (Eigen::Index e = 0; e < s.edge_features.rows(); ++e) EXPECT_GT(s.edge_features(e, 3), 0.0);
  EXPECT_EQ(s.states(0, 0), 1e7);
}

TEST(MeshToGraph, ConfigErrors) {
  const auto m = mesh::build_cartesian_mesh(2, 1, 2, 1);
  const auto g = geo::make_geomodel(m, 0, m.cells[0].centroid, {1e-13, 1e-13});
  EXPECT_THROW(graph::mesh_to_graph(m, nullptr, g, flat_snapshots(2, 1, 0.0), graph::FeatureConfig::transmissibility,
                                    graph::Variable::saturation),
               plume::InvalidConfig);
  EXPECT_THROW(graph::mesh_to_graph(m, nullptr, g, flat_snapshots(2, 1, 0.0), graph::FeatureConfig::relperm,
                                    graph::Variable::pressure),
               plume::InvalidConfig);
  EXPECT_THROW(graph::parse_feature_config("bogus"), plume::InvalidConfig);
}

TEST(Detrend, TwoSampleHandStatistics) {
  const auto m = mesh::build_cartesian_mesh(1, 1, 1, 1);
  const auto g = geo::make_geomodel(m, 0, m.cells[0].centroid, {1e-13});
  std::vector<graph::GraphSample> s;
  for (double v : {1.0, 3.0}) {
    auto snaps = flat_snapshots(1, 1, 0.0);
    snaps[1].s_g[0] = v;
    s.push_back(graph::mesh_to_graph(m, nullptr, g, snaps, graph::FeatureConfig::baseline, graph::Variable::saturation));
  }
  const auto st = graph::detrend_fit(s, 1);
  EXPECT_DOUBLE_EQ(st.dynamic[1].mean, 2.0);
  EXPECT_DOUBLE_EQ(st.dynamic[1].std, 1.0);
  EXPECT_EQ(st.dynamic[0].std, graph::kStdFloor);
  const auto z = graph::normalize_states(s[0], st);
  EXPECT_EQ(z(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(z(1, 0), -1.0);
}

TEST(Detrend, SingleSampleIsDegenerate) {
  const auto m = mesh::build_cartesian_mesh(1, 1, 1, 1);
  const auto g = geo::make_geomodel(m, 0, m.cells[0].centroid, {1e-13});
  const auto s = graph::mesh_to_graph(m, nullptr, g, flat_snapshots(1, 1, 0.0), graph::FeatureConfig::baseline,
                                      graph::Variable::saturation);
  EXPECT_THROW(graph::detrend_fit({s}, 1), plume::DegenerateStats);
}

TEST(Detrend, RoundTripAndFallback) {
  const std::vector<graph::GraphSample> s{desk_sample(1, graph::FeatureConfig::baseline),
                                          desk_sample(2, graph::FeatureConfig::baseline)};
  const auto st = graph::detrend_fit(s, 4);
  EXPECT_EQ(st.dynamic.size(), 5u);
  std::vector<double> x(s[0].states.cols());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = s[0].states(3, static_cast<Eigen::Index>(i));
  for (std::size_t step : {0u, 3u, 4u, 6u, 15u}) {
    const auto back = graph::detrend_invert(graph::detrend_apply(x, st, step), st, step);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(back[i], x[i], 1e-12);
  }
  EXPECT_EQ(st.dynamic_at(15).mean, st.dynamic_pooled.mean);
  EXPECT_EQ(st.dynamic_at(15).std, st.dynamic_pooled.std);
  EXPECT_EQ(st.dynamic_at(3).mean, st.dynamic[3].mean);
  EXPECT_EQ(graph::detrend_apply(st.dynamic[2].mean, st.dynamic[2]), 0.0);
}

TEST(Detrend, NormalizedTrainingSetIsStandard) {
  const std::vector<graph::GraphSample> s{desk_sample(4, graph::FeatureConfig::both),
                                          desk_sample(5, graph::FeatureConfig::both),
                                          desk_sample(6, graph::FeatureConfig::both)};
  const std::size_t nt = 5;
  const auto st = graph::detrend_fit(s, nt);
  auto check = [](const std::vector<double>& v, bool floored) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    const double sd = std::sqrt(ss / static_cast<double>(v.size()));
    EXPECT_LT(std::abs(m), 1e-10);
    if (!floored) {
      EXPECT_LT(std::abs(sd - 1.0), 1e-10);
    }
  };
  for (std::size_t c = 0; c < graph::kStaticChannels; ++c) {
    std::vector<double> v;
    for (const auto& g : s) {
      const auto z = graph::normalize_static(g, st);
      for (Eigen::Index i = 0; i < z.rows(); ++i) v.push_back(z(i, static_cast<Eigen::Index>(c)));
    }
    check(v, st.node_static[c].std == graph::kStdFloor);
  }
  for (std::size_t c = 0; c < 4; ++c) {
    std::vector<double> v;
    for (const auto& g : s) {
      const auto z = graph::normalize_edges(g, st);
      for (Eigen::Index i = 0; i < z.rows(); ++i) v.push_back(z(i, static_cast<Eigen::Index>(c)));
    }
    check(v, st.edge[c].std == graph::kStdFloor);
  }
  for (std::size_t k = 0; k <= nt; ++k) {
    std::vector<double> v, r;
    for (const auto& g : s) {
      const auto z = graph::normalize_states(g, st);
      const auto kr = graph::relperm_channel(g.saturation.row(static_cast<Eigen::Index>(k)), g.props, st, k);
      for (Eigen::Index i = 0; i < z.cols(); ++i) {
        v.push_back(z(static_cast<Eigen::Index>(k), i));
        r.push_back(kr(i));
      }
    }
    check(v, st.dynamic[k].std == graph::kStdFloor);
    check(r, st.relperm[k].std == graph::kStdFloor);
  }
}

TEST(Detrend, RelpermChannelFormula) {
  graph::NormStats st = plume::testing::unit_stats(2, graph::FeatureConfig::relperm);
  st.relperm[1] = {0.1, 0.5};
  Eigen::RowVectorXd s(3);
  s << 0.0, 0.4, 0.8;
  const auto z = graph::relperm_channel(s, {}, st, 1);
  EXPECT_NEAR(z(0), (0.0 - 0.1) / 0.5, 1e-15);
  EXPECT_NEAR(z(1), (0.2375 - 0.1) / 0.5, 1e-15);
  EXPECT_NEAR(z(2), (0.95 - 0.1) / 0.5, 1e-15);
}

TEST(Truncate, KeepsLeadingSnapshots) {
  const auto s = desk_sample(7, graph::FeatureConfig::relperm);
  const auto t = graph::truncate_steps(s, 3);
  EXPECT_EQ(t.n_steps(), 3u);
  EXPECT_EQ(t.states.row(2), s.states.row(2));
  EXPECT_EQ(t.saturation.rows(), 4);
  EXPECT_THROW(graph::truncate_steps(s, 99), plume::InvalidArgument);
}
