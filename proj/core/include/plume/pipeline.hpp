#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "plume/archive.hpp"
#include "plume/geomodel.hpp"
#include "plume/graph.hpp"
#include "plume/metrics.hpp"
#include "plume/model.hpp"
#include "plume/simcore.hpp"
#include "plume/trainer.hpp"

namespace plume::pipeline {

struct MeshSettings {
  double lx = 1000.0;
  double ly = 1000.0;
  std::size_t nx = 16;
  std::size_t ny = 16;
  double jitter = 0.3;  // fraction of the lattice spacing
  std::vector<Segment> faults{{{100.0, 300.0}, {400.0, 600.0}}, {{400.0, 500.0}, {800.0, 800.0}}};
  mesh::VoronoiOptions voronoi;
};

struct GeoSettings {
  geo::LogPermParams perm;
  double porosity = 0.2;
};

struct DataSettings {
  std::size_t n_train = 10;
  std::size_t n_test = 2;
  graph::FeatureConfig features = graph::FeatureConfig::baseline;
  graph::Variable variable = graph::Variable::saturation;
  bool features_explicit = false;  // set when the config or a flag names the features
};

struct EvalSettings {
  std::vector<std::size_t> horizons{11, 19};
  bool export_fields = true;
};

/// One document drives every stage; see README ("Run configuration").
struct RunConfig {
  std::uint64_t seed = 0;
  MeshSettings mesh;
  GeoSettings geomodel;
  sim::FluidProps fluid;
  sim::Schedule schedule;
  DataSettings data;
  model::ModelConfig model{32, 4, 4, 9, 3, model::Variant::mgn_lstm};
  train::TrainConfig training{200, 2, 1e-3, 1e-6, 5e-4, 1.0, 0.05, 0.1, false, 11, 0};
  EvalSettings eval;
  std::string out = "plume_out";

  void validate() const;
};

/// Parses a JSON configuration; unknown keys raise InvalidConfig.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);
std::string dump_run_config(const RunConfig& config);

/// Per-realization seed stream derived from (seed, id).
std::uint64_t realization_seed(std::uint64_t seed, std::uint64_t id, std::uint64_t stream);

/// Mesh, geomodel and full simulation for realization `id`.
io::Realization generate_realization(const RunConfig& config, std::uint64_t id);

struct GenDataResult {
  std::string train_path;
  std::string test_path;
  std::string manifest_path;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::size_t n_failed = 0;
};

/// Writes <out>/train.mgnl, <out>/test.mgnl and <out>/manifest.json.
GenDataResult cmd_gen_data(const RunConfig& config, std::ostream& log);

struct TrainOutput {
  io::Checkpoint checkpoint;
  train::TrainResult result;
  std::string checkpoint_path;
  std::string log_path;
};

/// Model config with input widths taken from the feature config.
model::ModelConfig model_config_for(const RunConfig& config, graph::FeatureConfig features);

/// Trains on the first `training.n_steps` steps of the dataset at `dataset_path`.
TrainOutput cmd_train(const RunConfig& config, const std::string& dataset_path, std::ostream& log);
/// In-memory variant used by the file command and the test suites.
TrainOutput train_on(const RunConfig& config, const io::Dataset& data, std::ostream* log);

struct SampleEval {
  std::uint64_t sample_id = 0;
  metrics::RolloutResult rollout;
  std::map<std::size_t, double> delta;  // horizon -> metric
};

struct EvalReport {
  graph::Variable variable = graph::Variable::saturation;
  std::vector<SampleEval> samples;
  std::vector<std::size_t> horizons;
};

/// Refuses (InvalidConfig) when the checkpoint's feature hash differs from the dataset's.
EvalReport evaluate(const io::Checkpoint& ckpt, const io::Dataset& data, std::size_t n_steps,
                    const std::vector<std::size_t>& horizons);

/// Metrics CSV, JSON summary and per-sample field exports under <out>.
EvalReport cmd_rollout_eval(const RunConfig& config, const std::string& checkpoint_path,
                            const std::string& dataset_path, std::size_t n_steps, std::ostream& log);

struct CompareRow {
  std::string variant;
  std::size_t horizon = 0;
  metrics::Summary summary;
};

struct CompareReport {
  std::vector<CompareRow> rows;
  /// median(MGN-LSTM) <= median(MGN) at the longest horizon.
  bool lstm_not_worse = false;
  std::size_t flag_horizon = 0;
};

CompareReport compare_reports(const EvalReport& lstm, const EvalReport& mgn);
CompareReport cmd_compare(const RunConfig& config, const std::string& lstm_checkpoint,
                          const std::string& mgn_checkpoint, const std::string& dataset_path, std::ostream& log);
std::string compare_json(const CompareReport& report);

/// Mesh text and VTK (permeability, cell type) of realization `id`; with
/// `simulate`, also the snapshot CSV and one VTK file per snapshot.
void cmd_export_mesh(const RunConfig& config, std::uint64_t id, bool simulate, std::ostream& log);

/// CSV of cell,step,p,s_g for a simulated realization.
void write_snapshots_csv(std::ostream& out, const std::vector<sim::SimState>& snapshots);

}  // namespace plume::pipeline
