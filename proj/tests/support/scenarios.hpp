#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "plume/geomodel.hpp"
#include "plume/graph.hpp"
#include "plume/mesh.hpp"
#include "plume/model.hpp"
#include "plume/simcore.hpp"

namespace plume::testing {

struct EdgeList {
  std::vector<std::size_t> src;
  std::vector<std::size_t> dst;
};

/// Random undirected graph stored as both orientations; a spanning path
/// keeps it connected.
inline EdgeList random_graph(std::size_t n, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::set<std::pair<std::size_t, std::size_t>> und;
  for (std::size_t k = 1; k < n; ++k) und.insert(std::minmax(perm[k - 1], perm[k]));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (u(rng) < p) und.insert({i, j});
    }
  }
  EdgeList e;
  for (auto [i, j] : und) {
    e.src.push_back(i);
    e.dst.push_back(j);
    e.src.push_back(j);
    e.dst.push_back(i);
  }
  return e;
}

/// Dense scaled Laplacian -D^{-1/2} A D^{-1/2} built without sparse code.
inline Eigen::MatrixXd dense_scaled_laplacian(const EdgeList& e, std::size_t n) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < e.src.size(); ++k) {
    if (e.src[k] == e.dst[k]) continue;
    a(static_cast<Eigen::Index>(e.src[k]), static_cast<Eigen::Index>(e.dst[k])) = 1.0;
    a(static_cast<Eigen::Index>(e.dst[k]), static_cast<Eigen::Index>(e.src[k])) = 1.0;
  }
  const Eigen::VectorXd deg = a.rowwise().sum();
  Eigen::VectorXd d = Eigen::VectorXd::Zero(deg.size());
  for (Eigen::Index i = 0; i < deg.size(); ++i) {
    if (deg(i) > 0) d(i) = 1.0 / std::sqrt(deg(i));
  }
  return -(d.asDiagonal() * a * d.asDiagonal());
}

/// sum_k T_k(L) X W_k with T_k evaluated as dense matrix polynomials.
inline Eigen::MatrixXd dense_cheb_conv(const Eigen::MatrixXd& l, const Eigen::MatrixXd& x,
                                       const std::vector<Eigen::MatrixXd>& w) {
  const Eigen::Index n = l.rows();
  std::vector<Eigen::MatrixXd> t;
  t.push_back(Eigen::MatrixXd::Identity(n, n));
  if (w.size() > 1) t.push_back(l);
  for (std::size_t k = 2; k < w.size(); ++k) t.push_back(2.0 * l * t[k - 1] - t[k - 2]);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, w.front().cols());
  for (std::size_t k = 0; k < w.size(); ++k) y += t[k] * x * w[k];
  return y;
}

inline ad::Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  ad::Matrix m(r, c);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = g(rng);
  return m;
}

/// Synthetic normalized sample on a random graph, enough for model and
/// trainer tests that do not need a simulator.
inline model::PreparedSample synthetic_sample(std::size_t n, std::size_t n_steps, std::uint64_t seed,
                                              graph::FeatureConfig features = graph::FeatureConfig::baseline,
                                              double edge_p = 0.3) {
  const EdgeList e = random_graph(n, edge_p, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  model::PreparedSample s;
  s.graph = model::make_context(e.src, e.dst, n);
  s.features = features;
  s.variable = graph::Variable::saturation;
  s.node_static = random_matrix(static_cast<Eigen::Index>(n), graph::kStaticChannels, rng);
  s.edge_in = random_matrix(static_cast<Eigen::Index>(e.src.size()),
                            static_cast<Eigen::Index>(graph::edge_input_width(features)), rng);
  s.targets = random_matrix(static_cast<Eigen::Index>(n_steps + 1), static_cast<Eigen::Index>(n), rng);
  std::uniform_real_distribution<double> u(0.0, 0.8);
  s.saturation.resize(static_cast<Eigen::Index>(n_steps + 1), static_cast<Eigen::Index>(n));
  for (Eigen::Index k = 0; k < s.saturation.size(); ++k) s.saturation.data()[k] = u(rng);
  s.states = s.saturation;
  return s;
}

/// Unit statistics so normalized and physical values coincide.
inline graph::NormStats unit_stats(std::size_t n_steps, graph::FeatureConfig features) {
  graph::NormStats st;
  st.n_steps_train = n_steps;
  st.node_static.assign(graph::kStaticChannels, {0.0, 1.0});
  st.edge.assign(graph::edge_input_width(features), {0.0, 1.0});
  st.dynamic.assign(n_steps + 1, {0.0, 1.0});
  st.dynamic_pooled = {0.0, 1.0};
  if (graph::uses_relperm(features)) {
    st.relperm.assign(n_steps + 1, {0.0, 1.0});
    st.relperm_pooled = {0.0, 1.0};
  }
  return st;
}

/// Relabels node i as perm[i] in every per-node and per-edge array.
inline model::PreparedSample permute_sample(const model::PreparedSample& s, const std::vector<std::size_t>& perm) {
  const std::size_t n = s.n();
  model::PreparedSample out = s;
  std::vector<std::size_t> src(s.graph.src->size()), dst(src.size());
  for (std::size_t k = 0; k < src.size(); ++k) {
    src[k] = perm[(*s.graph.src)[k]];
    dst[k] = perm[(*s.graph.dst)[k]];
  }
  out.graph = model::make_context(src, dst, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(perm[i]);
    out.node_static.row(b) = s.node_static.row(a);
    out.targets.col(b) = s.targets.col(a);
    out.states.col(b) = s.states.col(a);
    out.saturation.col(b) = s.saturation.col(a);
  }
  return out;
}

/// Horizontal strip of nx cells, one row deep.
struct Channel {
  mesh::Mesh mesh;
  geo::GeoModel geomodel;
};

inline Channel make_channel(std::size_t nx, double lx = 1000.0, double ly = 10.0, double perm_md = 100.0) {
  Channel c;
  c.mesh = mesh::build_cartesian_mesh(nx, 1, lx, ly);
  std::vector<double> perm(nx, perm_md * geo::kMilliDarcy);
  c.geomodel = geo::make_geomodel(c.mesh, 0, c.mesh.cells[0].centroid, std::move(perm), 0.2);
  return c;
}

}  // namespace plume::testing
