#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "plume/geomodel.hpp"
#include "plume/graph.hpp"
#include "plume/mesh.hpp"
#include "plume/model.hpp"
#include "plume/simcore.hpp"

namespace plume::io {

inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t fnv1a64_file(const std::string& path);
std::string hex64(std::uint64_t v);

/// Hash of the graph-feature contract (feature config, variable, widths);
/// datasets and checkpoints must agree on it.
std::uint64_t feature_hash(graph::FeatureConfig features, graph::Variable variable);

struct Realization {
  std::uint64_t id = 0;
  mesh::Mesh mesh;
  geo::GeoModel geomodel;
  std::vector<sim::SimState> snapshots;  // snapshot 0 is the initial state
};

struct DatasetInfo {
  std::string split;  // "train" / "test"
  std::uint64_t seed = 0;
  std::size_t n_steps = 0;
  graph::FeatureConfig features = graph::FeatureConfig::baseline;
  graph::Variable variable = graph::Variable::saturation;
  sim::FluidProps props;
  double initial_pressure = 10e6;
};

struct Dataset {
  DatasetInfo info;
  std::vector<Realization> samples;
};

// Layout: "MGNL", u32 version, u64 length + JSON info block, u64 sample
// count, then per sample the mesh, geomodel and snapshot blocks. All
// integers are little-endian u64 and all reals little-endian f64.
void write_dataset(std::ostream& out, const Dataset& data);
Dataset read_dataset(std::istream& in);
void save_dataset(const std::string& path, const Dataset& data);
Dataset load_dataset(const std::string& path);

/// Graph samples for every realization, using the dataset's feature config.
std::vector<graph::GraphSample> to_graph_samples(const Dataset& data);

struct Checkpoint {
  model::ModelConfig config;
  graph::FeatureConfig features = graph::FeatureConfig::baseline;
  graph::Variable variable = graph::Variable::saturation;
  std::uint64_t feature_hash = 0;
  std::size_t n_steps_train = 0;
  graph::NormStats stats;
  model::ParamSet params;
};

// Layout: "MGNW", u32 version, u64 length + JSON config block, normalization
// statistics, u64 parameter count, then per parameter u64 name length, name
// bytes, u64 rows, u64 cols and rows*cols row-major f64 values.
void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace plume::io
