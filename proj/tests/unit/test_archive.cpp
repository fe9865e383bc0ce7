#include <gtest/gtest.h>

#include <sstream>

#include "plume/archive.hpp"
#include "plume/error.hpp"
#include "plume/pipeline.hpp"

namespace io = plume::io;
namespace graph = plume::graph;
namespace model = plume::model;
namespace pipeline = plume::pipeline;

namespace {

pipeline::RunConfig small_run() {
  pipeline::RunConfig c;
  c.mesh.nx = 6;
  c.mesh.ny = 6;
  c.schedule.report_steps = 3;
  c.training.n_steps = 3;
  return c;
}

io::Dataset small_dataset(std::size_t n, graph::FeatureConfig features = graph::FeatureConfig::baseline) {
  const auto c = small_run();
  io::Dataset d;
  d.info.split = "train";
  d.info.seed = c.seed;
  d.info.n_steps = 3;
  d.info.features = features;
  for (std::size_t k = 0; k < n; ++k) d.samples.push_back(pipeline::generate_realization(c, k));
  return d;
}

std::string dataset_bytes(const io::Dataset& d) {
  std::ostringstream out(std::ios::binary);
  io::write_dataset(out, d);
  return out.str();
}

io::Checkpoint small_checkpoint() {
  io::Checkpoint c;
  c.config = {8, 2, 3, 10, 4, model::Variant::mgn_lstm};
  c.features = graph::FeatureConfig::both;
  c.feature_hash = io::feature_hash(c.features, c.variable);
  c.n_steps_train = 3;
  c.stats.n_steps_train = 3;
  c.stats.node_static.assign(graph::kStaticChannels, {1.5, 2.0});
  c.stats.edge.assign(4, {-1.0, 0.5});
  c.stats.dynamic = {{0.0, 1e-8}, {0.1, 0.2}, {0.2, 0.3}, {0.3, 0.4}};
  c.stats.dynamic_pooled = {0.2, 0.3};
  c.stats.relperm = {{0.0, 1e-8}, {0.01, 0.02}, {0.02, 0.03}, {0.03, 0.04}};
  c.stats.relperm_pooled = {0.02, 0.03};
  c.params = model::init_params(c.config, 7);
  return c;
}

}  // namespace

TEST(Hash, Fnv1aKnownValues) {
  EXPECT_EQ(io::fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(io::fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(io::hex64(0xabcull), "0000000000000abc");
}

TEST(Hash, FeatureHashSeparatesConfigs) {
  const auto a = io::feature_hash(graph::FeatureConfig::baseline, graph::Variable::saturation);
  EXPECT_EQ(a, io::feature_hash(graph::FeatureConfig::baseline, graph::Variable::saturation));
  EXPECT_NE(a, io::feature_hash(graph::FeatureConfig::transmissibility, graph::Variable::saturation));
  EXPECT_NE(a, io::feature_hash(graph::FeatureConfig::relperm, graph::Variable::saturation));
  EXPECT_NE(a, io::feature_hash(graph::FeatureConfig::baseline, graph::Variable::pressure));
}

TEST(Dataset, RoundTripIsExact) {
  const auto d = small_dataset(2);
  const std::string bytes = dataset_bytes(d);
  std::istringstream in(bytes, std::ios::binary);
  const io::Dataset r = io::read_dataset(in);
  EXPECT_EQ(r.info.split, "train");
  EXPECT_EQ(r.info.n_steps, 3u);
  ASSERT_EQ(r.samples.size(), 2u);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& a = d.samples[k];
    const auto& b = r.samples[k];
    EXPECT_EQ(a.id, b.id);
    ASSERT_EQ(a.mesh.num_cells(), b.mesh.num_cells());
    ASSERT_EQ(a.mesh.num_faces(), b.mesh.num_faces());
    for (std::size_t f = 0; f < a.mesh.num_faces(); ++f) {
      EXPECT_EQ(a.mesh.faces[f].left, b.mesh.faces[f].left);
      EXPECT_EQ(a.mesh.faces[f].right, b.mesh.faces[f].right);
      EXPECT_EQ(a.mesh.faces[f].fault, b.mesh.faces[f].fault);
      EXPECT_EQ(a.mesh.faces[f].area, b.mesh.faces[f].area);
    }
    EXPECT_EQ(a.geomodel.perm, b.geomodel.perm);
    EXPECT_EQ(a.geomodel.well_cell, b.geomodel.well_cell);
    ASSERT_EQ(a.snapshots.size(), 4u);
    for (std::size_t s = 0; s < 4; ++s) {
      EXPECT_EQ(a.snapshots[s].p, b.snapshots[s].p);
      EXPECT_EQ(a.snapshots[s].s_g, b.snapshots[s].s_g);
    }
  }
  EXPECT_EQ(dataset_bytes(r), bytes);
}

TEST(Dataset, RejectsBadMagicVersionAndTruncation) {
  std::string bytes = dataset_bytes(small_dataset(1));
  {
    std::string bad = bytes;
    bad[0] = 'X';
    std::istringstream in(bad, std::ios::binary);
    EXPECT_THROW(io::read_dataset(in), plume::FormatError);
  }
  {
    std::string bad = bytes;
    bad[4] = 9;
    std::istringstream in(bad, std::ios::binary);
    EXPECT_THROW(io::read_dataset(in), plume::FormatError);
  }
  {
    std::istringstream in(bytes.substr(0, bytes.size() / 2), std::ios::binary);
    EXPECT_THROW(io::read_dataset(in), plume::FormatError);
  }
  EXPECT_THROW(io::load_dataset("/nonexistent/plume.mgnl"), plume::InvalidConfig);
}

TEST(Dataset, GraphSamplesFollowFeatureConfig) {
  const auto d = small_dataset(1, graph::FeatureConfig::both);
  const auto g = io::to_graph_samples(d);
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g[0].edge_features.cols(), 4);
  EXPECT_EQ(g[0].n_steps(), 3u);
  EXPECT_EQ(g[0].saturation.rows(), 4);
}

TEST(Checkpoint, RoundTripIsExact) {
  const auto c = small_checkpoint();
  std::ostringstream out(std::ios::binary);
  io::write_checkpoint(out, c);
  std::istringstream in(out.str(), std::ios::binary);
  const auto r = io::read_checkpoint(in);
  EXPECT_EQ(r.config.latent, 8u);
  EXPECT_EQ(r.config.cheb_order, 3u);
  EXPECT_EQ(r.config.variant, model::Variant::mgn_lstm);
  EXPECT_EQ(r.features, graph::FeatureConfig::both);
  EXPECT_EQ(r.feature_hash, c.feature_hash);
  EXPECT_EQ(r.stats.dynamic.size(), 4u);
  EXPECT_EQ(r.stats.dynamic[2].std, 0.3);
  EXPECT_EQ(r.stats.relperm_pooled.mean, 0.02);
  ASSERT_EQ(r.params.size(), c.params.size());
  for (std::size_t k = 0; k < c.params.size(); ++k) {
    EXPECT_EQ(r.params.name(k), c.params.name(k));
    EXPECT_EQ(r.params.value(k), c.params.value(k));
  }
}

TEST(Checkpoint, ShapeCheckRejectsWrongParameters) {
  auto c = small_checkpoint();
  c.params.at("dec.w1").resize(3, 3);
  std::ostringstream out(std::ios::binary);
  io::write_checkpoint(out, c);
  std::istringstream in(out.str(), std::ios::binary);
  EXPECT_THROW(io::read_checkpoint(in), plume::FormatError);

  auto d = small_checkpoint();
  d.config.variant = model::Variant::mgn;  // LSTM weights present but not declared
  std::ostringstream out2(std::ios::binary);
  io::write_checkpoint(out2, d);
  std::istringstream in2(out2.str(), std::ios::binary);
  EXPECT_THROW(io::read_checkpoint(in2), plume::FormatError);
}

TEST(Checkpoint, RejectsDatasetFile) {
  std::istringstream in(dataset_bytes(small_dataset(1)), std::ios::binary);
  EXPECT_THROW(io::read_checkpoint(in), plume::FormatError);
}
