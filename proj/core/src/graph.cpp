#include "plume/graph.hpp"

#include <cmath>

#include "plume/error.hpp"

namespace plume::graph {

bool uses_transmissibility(FeatureConfig c) {
  return c == FeatureConfig::transmissibility || c == FeatureConfig::both;
}

bool uses_relperm(FeatureConfig c) { return c == FeatureConfig::relperm || c == FeatureConfig::both; }

std::string to_string(FeatureConfig c) {
  switch (c) {
    case FeatureConfig::baseline: return "baseline";
    case FeatureConfig::transmissibility: return "trans";
    case FeatureConfig::relperm: return "relperm";
    case FeatureConfig::both: return "both";
  }
  return "?";
}

std::string to_string(Variable v) { return v == Variable::saturation ? "saturation" : "pressure"; }

FeatureConfig parse_feature_config(const std::string& s) {
  if (s == "baseline") return FeatureConfig::baseline;
  if (s == "trans" || s == "transmissibility") return FeatureConfig::transmissibility;
  if (s == "relperm") return FeatureConfig::relperm;
  if (s == "both") return FeatureConfig::both;
  throw InvalidConfig("unknown feature configuration '" + s + "'");
}

Variable parse_variable(const std::string& s) {
  if (s == "saturation" || s == "s_g") return Variable::saturation;
  if (s == "pressure" || s == "p_g") return Variable::pressure;
  throw InvalidConfig("unknown variable '" + s + "'");
}

std::size_t node_input_width(FeatureConfig c) { return kStaticChannels + 1 + (uses_relperm(c) ? 1 : 0); }
std::size_t edge_input_width(FeatureConfig c) { return 3 + (uses_transmissibility(c) ? 1 : 0); }

GraphSample mesh_to_graph(const mesh::Mesh& mesh, const mesh::TransmissibilityMap* trans,
                          const geo::GeoModel& geomodel, const std::vector<sim::SimState>& snapshots,
                          FeatureConfig features, Variable variable, const sim::FluidProps& props) {
  if (snapshots.empty()) throw InvalidArgument("mesh_to_graph: no snapshots");
  if (uses_transmissibility(features) && trans == nullptr) {
    throw InvalidConfig("mesh_to_graph: feature config '" + to_string(features) +
                        "' needs a transmissibility map");
  }
  if (uses_relperm(features) && variable == Variable::pressure) {
    throw InvalidConfig("mesh_to_graph: the relperm channel applies to the saturation variable only");
  }
  if (trans != nullptr && trans->size() != mesh.num_faces()) {
    throw InvalidArgument("mesh_to_graph: transmissibility map does not match mesh");
  }
  const std::size_t n = mesh.num_cells();
  if (geomodel.perm.size() != n || geomodel.cell_type.size() != n) {
    throw InvalidArgument("mesh_to_graph: geomodel does not match mesh");
  }

  GraphSample g;
  g.n_cells = n;
  g.features = features;
  g.variable = variable;
  g.props = props;

  const auto idx = [](std::size_t i) { return static_cast<Eigen::Index>(i); };
  g.node_static.resize(idx(n), idx(kStaticChannels));
  for (std::size_t i = 0; i < n; ++i) {
    const mesh::Cell& c = mesh.cells[i];
    const auto hot = geomodel.one_hot(i);
    g.node_static.row(idx(i)) << geomodel.perm[i] / geo::kMilliDarcy, c.volume, c.centroid.x, c.centroid.y,
        hot[0], hot[1], hot[2], hot[3];
  }

  std::vector<std::size_t> faces;
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
    const mesh::Face& face = mesh.faces[f];
    if (!face.is_interior()) continue;
    const bool conducts = trans != nullptr ? (*trans)[f] > 0.0 : !face.fault;
    if (!conducts) continue;
    faces.push_back(f);
    g.src.push_back(face.left);
    g.dst.push_back(face.right);
    g.src.push_back(face.right);
    g.dst.push_back(face.left);
  }
  const std::size_t ne = edge_input_width(features);
  g.edge_features.resize(idx(g.src.size()), idx(ne));
  for (std::size_t e = 0; e < g.src.size(); ++e) {
    const Point2 d = mesh.cells[g.dst[e]].centroid - mesh.cells[g.src[e]].centroid;
    g.edge_features(idx(e), 0) = d.x;
    g.edge_features(idx(e), 1) = d.y;
    g.edge_features(idx(e), 2) = norm(d);
    if (ne == 4) g.edge_features(idx(e), 3) = (*trans)[faces[e / 2]];
  }

  const std::size_t nt = snapshots.size();
  g.states.resize(idx(nt), idx(n));
  if (uses_relperm(features)) g.saturation.resize(idx(nt), idx(n));
  for (std::size_t k = 0; k < nt; ++k) {
    const sim::SimState& s = snapshots[k];
    if (s.p.size() != n || s.s_g.size() != n) throw InvalidArgument("mesh_to_graph: snapshot size mismatch");
    for (std::size_t i = 0; i < n; ++i) {
      g.states(idx(k), idx(i)) = variable == Variable::saturation ? s.s_g[i] : s.p[i];
      if (uses_relperm(features)) g.saturation(idx(k), idx(i)) = s.s_g[i];
    }
  }
  return g;
}

GraphSample truncate_steps(const GraphSample& sample, std::size_t n_steps) {
  if (n_steps > sample.n_steps()) throw InvalidArgument("truncate_steps: sample has fewer steps");
  GraphSample out = sample;
  const auto rows = static_cast<Eigen::Index>(n_steps + 1);
  out.states = sample.states.topRows(rows);
  if (sample.saturation.rows() > 0) out.saturation = sample.saturation.topRows(rows);
  return out;
}

Moments NormStats::dynamic_at(std::size_t step) const {
  return step < dynamic.size() ? dynamic[step] : dynamic_pooled;
}

Moments NormStats::relperm_at(std::size_t step) const {
  return step < relperm.size() ? relperm[step] : relperm_pooled;
}

namespace {

struct Accumulator {
  std::vector<double> values;  // kept for a two-pass variance

  void add(double v) { values.push_back(v); }

  Moments finish() const {
    Moments m;
    if (values.empty()) return m;
    double s = 0.0;
    for (double v : values) s += v;
    m.mean = s / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - m.mean) * (v - m.mean);
    m.std = std::max(std::sqrt(ss / static_cast<double>(values.size())), kStdFloor);
    return m;
  }
};

}  // namespace

NormStats detrend_fit(const std::vector<GraphSample>& samples, std::size_t n_steps_train) {
  if (samples.size() < 2) {
    throw DegenerateStats("detrend_fit: need at least 2 training samples, got " + std::to_string(samples.size()));
  }
  const FeatureConfig features = samples[0].features;
  for (const GraphSample& s : samples) {
    if (s.features != features || s.variable != samples[0].variable) {
      throw InvalidArgument("detrend_fit: samples disagree on feature config or variable");
    }
    if (s.n_steps() < n_steps_train) {
      throw InvalidArgument("detrend_fit: sample has fewer steps than n_steps_train");
    }
  }
  const bool kr = uses_relperm(features);
  const std::size_t ne = edge_input_width(features);

  std::vector<Accumulator> stat(kStaticChannels), edge(ne), dyn(n_steps_train + 1), rel(kr ? n_steps_train + 1 : 0);
  Accumulator dyn_pool, rel_pool;
  for (const GraphSample& s : samples) {
    for (Eigen::Index i = 0; i < s.node_static.rows(); ++i) {
      for (std::size_t c = 0; c < kStaticChannels; ++c) stat[c].add(s.node_static(i, static_cast<Eigen::Index>(c)));
    }
    for (Eigen::Index e = 0; e < s.edge_features.rows(); ++e) {
      for (std::size_t c = 0; c < ne; ++c) edge[c].add(s.edge_features(e, static_cast<Eigen::Index>(c)));
    }
    for (std::size_t k = 0; k <= n_steps_train; ++k) {
      const auto row = static_cast<Eigen::Index>(k);
      for (Eigen::Index i = 0; i < s.states.cols(); ++i) {
        dyn[k].add(s.states(row, i));
        dyn_pool.add(s.states(row, i));
        if (kr) {
          const double v = sim::relperm(sim::Phase::gas, s.saturation(row, i), s.props);
          rel[k].add(v);
          rel_pool.add(v);
        }
      }
    }
  }

  NormStats out;
  out.n_steps_train = n_steps_train;
  for (const auto& a : stat) out.node_static.push_back(a.finish());
  for (const auto& a : edge) out.edge.push_back(a.finish());
  for (const auto& a : dyn) out.dynamic.push_back(a.finish());
  out.dynamic_pooled = dyn_pool.finish();
  for (const auto& a : rel) out.relperm.push_back(a.finish());
  if (kr) out.relperm_pooled = rel_pool.finish();
  return out;
}

double detrend_apply(double x, Moments m) { return (x - m.mean) / m.std; }
double detrend_invert(double z, Moments m) { return z * m.std + m.mean; }

std::vector<double> detrend_apply(const std::vector<double>& x, const NormStats& stats, std::size_t step) {
  const Moments m = stats.dynamic_at(step);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = detrend_apply(x[i], m);
  return out;
}

std::vector<double> detrend_invert(const std::vector<double>& z, const NormStats& stats, std::size_t step) {
  const Moments m = stats.dynamic_at(step);
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = detrend_invert(z[i], m);
  return out;
}

ad::Matrix normalize_static(const GraphSample& sample, const NormStats& stats) {
  if (stats.node_static.size() != kStaticChannels) throw InvalidArgument("normalize_static: stats missing");
  ad::Matrix out = sample.node_static;
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    const Moments m = stats.node_static[static_cast<std::size_t>(c)];
    out.col(c) = (out.col(c).array() - m.mean) / m.std;
  }
  return out;
}

ad::Matrix normalize_edges(const GraphSample& sample, const NormStats& stats) {
  if (stats.edge.size() != static_cast<std::size_t>(sample.edge_features.cols())) {
    throw InvalidConfig("normalize_edges: stats were fit with a different edge width");
  }
  ad::Matrix out = sample.edge_features;
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    const Moments m = stats.edge[static_cast<std::size_t>(c)];
    out.col(c) = (out.col(c).array() - m.mean) / m.std;
  }
  return out;
}

ad::Matrix normalize_states(const GraphSample& sample, const NormStats& stats) {
  ad::Matrix out = sample.states;
  for (Eigen::Index k = 0; k < out.rows(); ++k) {
    const Moments m = stats.dynamic_at(static_cast<std::size_t>(k));
    out.row(k) = (out.row(k).array() - m.mean) / m.std;
  }
  return out;
}

Eigen::RowVectorXd relperm_channel(const Eigen::RowVectorXd& s_g, const sim::FluidProps& props,
                                   const NormStats& stats, std::size_t step) {
  const Moments m = stats.relperm_at(step);
  Eigen::RowVectorXd out(s_g.size());
  for (Eigen::Index i = 0; i < s_g.size(); ++i) {
    out(i) = detrend_apply(sim::relperm(sim::Phase::gas, s_g(i), props), m);
  }
  return out;
}

}  // namespace plume::graph
