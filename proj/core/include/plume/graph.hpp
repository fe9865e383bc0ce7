#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "plume/geomodel.hpp"
#include "plume/mesh.hpp"
#include "plume/simcore.hpp"
#include "plume/tensor.hpp"

namespace plume::graph {

enum class FeatureConfig { baseline, transmissibility, relperm, both };
enum class Variable { saturation, pressure };

bool uses_transmissibility(FeatureConfig c);
bool uses_relperm(FeatureConfig c);
std::string to_string(FeatureConfig c);
std::string to_string(Variable v);
/// Accepts baseline, trans, transmissibility, relperm, both.
FeatureConfig parse_feature_config(const std::string& s);
Variable parse_variable(const std::string& s);

/// k (mD), V, x, y, one-hot(4).
inline constexpr std::size_t kStaticChannels = 8;
std::size_t node_input_width(FeatureConfig c);  // 9 or 10
std::size_t edge_input_width(FeatureConfig c);  // 3 or 4

struct GraphSample {
  std::size_t n_cells = 0;
  FeatureConfig features = FeatureConfig::baseline;
  Variable variable = Variable::saturation;
  std::vector<std::size_t> src;  // directed edges, both orientations
  std::vector<std::size_t> dst;
  ad::Matrix node_static;    // [n_cells, 8]
  ad::Matrix edge_features;  // [n_edges, 3 or 4]
  ad::Matrix states;         // [n_steps + 1, n_cells], physical units, row 0 initial
  ad::Matrix saturation;     // [n_steps + 1, n_cells] gas saturation (relperm configs only)
  sim::FluidProps props;

  std::size_t n_edges() const { return src.size(); }
  std::size_t n_steps() const { return states.rows() > 0 ? static_cast<std::size_t>(states.rows()) - 1 : 0; }
};

/// Two directed edges per conducting face; with `trans` null, faces that are
/// interior and not fault-flagged conduct. Throws InvalidConfig when the
/// config needs transmissibility and `trans` is null, or when relperm is
/// requested for the pressure variable.
GraphSample mesh_to_graph(const mesh::Mesh& mesh, const mesh::TransmissibilityMap* trans,
                          const geo::GeoModel& geomodel, const std::vector<sim::SimState>& snapshots,
                          FeatureConfig features, Variable variable,
                          const sim::FluidProps& props = {});

/// Keeps the first n_steps + 1 snapshots.
GraphSample truncate_steps(const GraphSample& sample, std::size_t n_steps);

struct Moments {
  double mean = 0.0;
  double std = 1.0;
};

inline constexpr double kStdFloor = 1e-8;

/// Detrending statistics. Dynamic and relperm channels carry one entry per
/// snapshot index 0..n_steps_train; later indices use the pooled moments.
struct NormStats {
  std::size_t n_steps_train = 0;
  std::vector<Moments> node_static;  // kStaticChannels
  std::vector<Moments> edge;         // edge_input_width
  std::vector<Moments> dynamic;      // n_steps_train + 1
  Moments dynamic_pooled;
  std::vector<Moments> relperm;      // empty unless relperm
  Moments relperm_pooled;

  Moments dynamic_at(std::size_t step) const;
  Moments relperm_at(std::size_t step) const;
};

NormStats detrend_fit(const std::vector<GraphSample>& samples, std::size_t n_steps_train);

double detrend_apply(double x, Moments m);
double detrend_invert(double z, Moments m);
/// Dynamic-variable z-scoring at snapshot index `step`.
std::vector<double> detrend_apply(const std::vector<double>& x, const NormStats& stats, std::size_t step);
std::vector<double> detrend_invert(const std::vector<double>& z, const NormStats& stats, std::size_t step);

ad::Matrix normalize_static(const GraphSample& sample, const NormStats& stats);
ad::Matrix normalize_edges(const GraphSample& sample, const NormStats& stats);
/// [n_steps + 1, n_cells] of normalized dynamic values.
ad::Matrix normalize_states(const GraphSample& sample, const NormStats& stats);
/// Normalized k_rg of the row of gas saturations at snapshot index `step`.
Eigen::RowVectorXd relperm_channel(const Eigen::RowVectorXd& s_g, const sim::FluidProps& props,
                                   const NormStats& stats, std::size_t step);

}  // namespace plume::graph
