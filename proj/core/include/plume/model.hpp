#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "plume/graph.hpp"
#include "plume/tensor.hpp"

namespace plume::model {

enum class Variant { mgn_lstm, mgn };

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);

struct ModelConfig {
  std::size_t latent = 100;
  std::size_t layers = 10;
  std::size_t cheb_order = 8;
  std::size_t node_in = 9;
  std::size_t edge_in = 3;
  Variant variant = Variant::mgn_lstm;

  void validate() const;
};

/// Ordered, named parameter matrices.
class ParamSet {
 public:
  void add(std::string name, ad::Matrix value);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  std::size_t index(const std::string& name) const;
  const ad::Matrix& at(const std::string& name) const { return values_[index(name)]; }
  ad::Matrix& at(const std::string& name) { return values_[index(name)]; }

  std::size_t size() const { return values_.size(); }
  const std::string& name(std::size_t k) const { return names_[k]; }
  const ad::Matrix& value(std::size_t k) const { return values_[k]; }
  ad::Matrix& value(std::size_t k) { return values_[k]; }
  const std::vector<ad::Matrix>& values() const { return values_; }
  std::vector<ad::Matrix>& values() { return values_; }
  std::size_t num_scalars() const;

 private:
  std::vector<std::string> names_;
  std::vector<ad::Matrix> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Glorot-uniform weights, zero biases, unit LayerNorm gains. The
/// recurrent-cell parameters are drawn last, so encoder, processor and
/// decoder weights agree between variants for the same seed.
ParamSet init_params(const ModelConfig& config, std::uint64_t seed);

/// ParamSet copied onto a tape as leaves.
class Bound {
 public:
  Bound(ad::Tape& tape, const ParamSet& params, bool requires_grad);
  /// Wraps leaves already on a tape, one per parameter in `params` order.
  Bound(const ParamSet& params, std::vector<ad::Tensor> leaves);
  ad::Tensor operator()(const std::string& name) const { return leaves_[params_->index(name)]; }
  const std::vector<ad::Tensor>& leaves() const { return leaves_; }
  ad::Tape& tape() const { return *tape_; }

 private:
  ad::Tape* tape_;
  const ParamSet* params_;
  std::vector<ad::Tensor> leaves_;
};

/// L~ = -D^{-1/2} A D^{-1/2} for the undirected relation of the edge list;
/// isolated nodes give zero rows.
ad::SparseMatrix scaled_laplacian(const std::vector<std::size_t>& src, const std::vector<std::size_t>& dst,
                                  std::size_t n);

struct GraphContext {
  std::size_t n = 0;
  std::shared_ptr<const std::vector<std::size_t>> src;
  std::shared_ptr<const std::vector<std::size_t>> dst;
  std::shared_ptr<const ad::SparseMatrix> laplacian;
};

GraphContext make_context(const std::vector<std::size_t>& src, const std::vector<std::size_t>& dst,
                          std::size_t n);

/// [T_0(L)X, T_1(L)X, ..., T_{K-1}(L)X] built by K-1 sparse products.
ad::Tensor cheb_basis(const ad::Tensor& x, const GraphContext& g, std::size_t k);
/// sum_k T_k(L) X W_k with W stacked as [K*d_in, d_out].
ad::Tensor cheb_conv(const ad::Tensor& x, const ad::Tensor& w, const GraphContext& g, std::size_t k);

/// Linear -> ReLU -> Linear (-> LayerNorm) with parameters prefix.{w1,b1,w2,b2[,gamma,beta]}.
ad::Tensor mlp(const Bound& p, const std::string& prefix, const ad::Tensor& x, bool layer_norm);

struct Latents {
  ad::Tensor v;
  ad::Tensor e;
};

Latents encode(const Bound& p, const ad::Tensor& node_in, const ad::Tensor& edge_in);
ad::Tensor encode_edges(const Bound& p, const ad::Tensor& edge_in);
ad::Tensor encode_nodes(const Bound& p, const ad::Tensor& node_in);
ad::Tensor process(const Bound& p, const ModelConfig& config, Latents latents, const GraphContext& g);

struct RecurrentState {
  ad::Tensor c;
  ad::Tensor h;
};

RecurrentState zero_state(ad::Tape& tape, std::size_t n, std::size_t latent);
RecurrentState gconv_lstm_step(const Bound& p, const ModelConfig& config, const ad::Tensor& v,
                               const RecurrentState& state, const GraphContext& g);
/// [n, 1] in normalized label space.
ad::Tensor decode(const Bound& p, const ad::Tensor& h);

/// A GraphSample normalized and paired with its graph operators.
struct PreparedSample {
  GraphContext graph;
  graph::FeatureConfig features = graph::FeatureConfig::baseline;
  graph::Variable variable = graph::Variable::saturation;
  sim::FluidProps props;
  ad::Matrix node_static;  // [n, 8] normalized
  ad::Matrix edge_in;      // [E, n_E] normalized
  ad::Matrix targets;      // [n_steps + 1, n] normalized dynamic variable
  ad::Matrix states;       // [n_steps + 1, n] physical
  ad::Matrix saturation;   // [n_steps + 1, n] physical s_g (relperm configs)

  std::size_t n() const { return graph.n; }
  std::size_t n_steps() const { return static_cast<std::size_t>(targets.rows()) - 1; }
};

PreparedSample prepare(const graph::GraphSample& sample, const graph::NormStats& stats);

/// Node input [n, n_N]: static channels, the dynamic value and (relperm
/// configs) the normalized k_rg channel.
ad::Tensor node_input(ad::Tape& tape, const PreparedSample& s, const ad::Tensor& dynamic,
                      const Eigen::RowVectorXd* relperm_norm);
ad::Tensor node_input(ad::Tape& tape, const PreparedSample& s, const ad::Tensor& dynamic, const ad::Tensor& relperm_norm);

/// Normalized k_rg channel [n, 1] computed on the tape from a normalized
/// saturation prediction for snapshot `step`, so gradients flow through it.
ad::Tensor relperm_input(const ad::Tensor& prediction, const PreparedSample& s, const graph::NormStats& stats,
                         std::size_t step);

struct StepOutput {
  ad::Tensor prediction;     // [n, 1] normalized
  ad::Tensor processed;      // V^m
  RecurrentState state;      // unset for the mgn variant
};

/// One autoregressive step: encode, process, (GConvLSTM), decode.
StepOutput forward_step(const Bound& p, const ModelConfig& config, const PreparedSample& s,
                        const ad::Tensor& node_in, const ad::Tensor& edge_latent,
                        const std::optional<RecurrentState>& state);

struct Rollout {
  ad::Matrix normalized;  // [n_steps, n] predictions for snapshots 1..n_steps
  ad::Matrix physical;    // de-normalized
  ad::Matrix relperm_in;  // [n_steps, n] raw k_rg fed at each step (relperm configs)
};

/// Inference rollout from the true initial state, with a fresh tape per step.
Rollout rollout(const ParamSet& params, const ModelConfig& config, const PreparedSample& s,
                const graph::NormStats& stats, std::size_t n_steps);

}  // namespace plume::model
