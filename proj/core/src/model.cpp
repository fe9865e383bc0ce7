#include "plume/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "plume/error.hpp"

namespace plume::model {

using ad::Matrix;
using ad::Tensor;

std::string to_string(Variant v) { return v == Variant::mgn_lstm ? "mgn_lstm" : "mgn"; }

Variant parse_variant(const std::string& s) {
  if (s == "mgn_lstm" || s == "lstm") return Variant::mgn_lstm;
  if (s == "mgn") return Variant::mgn;
  throw InvalidConfig("unknown model variant '" + s + "'");
}

void ModelConfig::validate() const {
  if (latent < 1) throw InvalidConfig("model: latent size must be >= 1");
  if (layers < 1) throw InvalidConfig("model: processor depth must be >= 1");
  if (cheb_order < 1) throw InvalidConfig("model: Chebyshev order must be >= 1");
  if (node_in < 1 || edge_in < 1) throw InvalidConfig("model: input widths must be >= 1");
}

// ---------------------------------------------------------------- ParamSet

void ParamSet::add(std::string name, Matrix value) {
  if (index_.count(name)) throw InvalidArgument("ParamSet: duplicate parameter '" + name + "'");
  index_.emplace(name, names_.size());
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
}

std::size_t ParamSet::index(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) throw InvalidArgument("ParamSet: no parameter '" + name + "'");
  return it->second;
}

std::size_t ParamSet::num_scalars() const {
  std::size_t n = 0;
  for (const Matrix& m : values_) n += static_cast<std::size_t>(m.size());
  return n;
}

namespace {

class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}

  Matrix glorot(std::size_t fan_in, std::size_t fan_out) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-a, a);
    Matrix m(static_cast<Eigen::Index>(fan_in), static_cast<Eigen::Index>(fan_out));
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = u(rng_);
    return m;
  }

 private:
  std::mt19937_64 rng_;
};

Matrix zeros_row(std::size_t d) { return Matrix::Zero(1, static_cast<Eigen::Index>(d)); }
Matrix ones_row(std::size_t d) { return Matrix::Ones(1, static_cast<Eigen::Index>(d)); }

void add_mlp(ParamSet& ps, Initializer& init, const std::string& prefix, std::size_t in, std::size_t hidden,
             std::size_t out, bool layer_norm) {
  ps.add(prefix + ".w1", init.glorot(in, hidden));
  ps.add(prefix + ".b1", zeros_row(hidden));
  ps.add(prefix + ".w2", init.glorot(hidden, out));
  ps.add(prefix + ".b2", zeros_row(out));
  if (layer_norm) {
    ps.add(prefix + ".gamma", ones_row(out));
    ps.add(prefix + ".beta", zeros_row(out));
  }
}

const char* const kGates[] = {"i", "f", "c", "o"};

}  // namespace

ParamSet init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  const std::size_t h = config.latent;
  ParamSet ps;
  Initializer init(seed);
  add_mlp(ps, init, "enc.node", config.node_in, h, h, true);
  add_mlp(ps, init, "enc.edge", config.edge_in, h, h, true);
  for (std::size_t l = 0; l < config.layers; ++l) {
    const std::string pre = "proc." + std::to_string(l);
    add_mlp(ps, init, pre + ".edge", 3 * h, h, h, true);
    add_mlp(ps, init, pre + ".node", 2 * h, h, h, true);
  }
  add_mlp(ps, init, "dec", h, h, 1, false);
  if (config.variant == Variant::mgn_lstm) {
    const std::size_t kh = config.cheb_order * h;
    for (const char* g : kGates) {
      ps.add(std::string("lstm.W_x") + g, init.glorot(kh, h));
      ps.add(std::string("lstm.W_h") + g, init.glorot(kh, h));
      ps.add(std::string("lstm.b_") + g, zeros_row(h));
    }
    ps.add("lstm.w_co", zeros_row(h));
  }
  return ps;
}

Bound::Bound(ad::Tape& tape, const ParamSet& params, bool requires_grad) : tape_(&tape), params_(&params) {
  leaves_.reserve(params.size());
  for (std::size_t k = 0; k < params.size(); ++k) leaves_.push_back(tape.variable(params.value(k), requires_grad));
}

Bound::Bound(const ParamSet& params, std::vector<Tensor> leaves)
    : tape_(leaves.empty() ? nullptr : leaves.front().tape()), params_(&params), leaves_(std::move(leaves)) {
  if (leaves_.size() != params.size()) throw InvalidArgument("Bound: leaf count does not match parameter count");
}

// ---------------------------------------------------------------- graph operators

ad::SparseMatrix scaled_laplacian(const std::vector<std::size_t>& src, const std::vector<std::size_t>& dst,
                                  std::size_t n) {
  if (src.size() != dst.size()) throw ShapeMismatch("scaled_laplacian: src/dst length mismatch");
  // undirected binary adjacency, self loops ignored
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t e = 0; e < src.size(); ++e) {
    if (src[e] >= n || dst[e] >= n) throw InvalidArgument("scaled_laplacian: node index out of range");
    if (src[e] == dst[e]) continue;
    adj[src[e]].push_back(dst[e]);
    adj[dst[e]].push_back(src[e]);
  }
  std::vector<double> inv_sqrt_deg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(adj[i].begin(), adj[i].end());
    adj[i].erase(std::unique(adj[i].begin(), adj[i].end()), adj[i].end());
    if (!adj[i].empty()) inv_sqrt_deg[i] = 1.0 / std::sqrt(static_cast<double>(adj[i].size()));
  }
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : adj[i]) trip.emplace_back(i, j, -inv_sqrt_deg[i] * inv_sqrt_deg[j]);
  }
  ad::SparseMatrix l(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  l.setFromTriplets(trip.begin(), trip.end());
  return l;
}

GraphContext make_context(const std::vector<std::size_t>& src, const std::vector<std::size_t>& dst,
                          std::size_t n) {
  GraphContext g;
  g.n = n;
  g.src = std::make_shared<const std::vector<std::size_t>>(src);
  g.dst = std::make_shared<const std::vector<std::size_t>>(dst);
  g.laplacian = std::make_shared<const ad::SparseMatrix>(scaled_laplacian(src, dst, n));
  return g;
}

Tensor cheb_basis(const Tensor& x, const GraphContext& g, std::size_t k) {
  if (k < 1) throw InvalidArgument("cheb_basis: order must be >= 1");
  std::vector<Tensor> terms{x};
  if (k >= 2) terms.push_back(ad::spmm(g.laplacian, x));
  for (std::size_t j = 2; j < k; ++j) {
    terms.push_back(ad::sub(ad::scale(ad::spmm(g.laplacian, terms[j - 1]), 2.0), terms[j - 2]));
  }
  return k == 1 ? x : ad::concat_cols(terms);
}

Tensor cheb_conv(const Tensor& x, const Tensor& w, const GraphContext& g, std::size_t k) {
  if (w.rows() != static_cast<Eigen::Index>(k) * x.cols()) {
    throw ShapeMismatch("cheb_conv: weight rows must be K * d_in");
  }
  return ad::matmul(cheb_basis(x, g, k), w);
}

// ---------------------------------------------------------------- network blocks

Tensor mlp(const Bound& p, const std::string& prefix, const Tensor& x, bool layer_norm) {
  Tensor h = ad::relu(ad::affine(x, p(prefix + ".w1"), p(prefix + ".b1")));
  Tensor y = ad::affine(h, p(prefix + ".w2"), p(prefix + ".b2"));
  if (layer_norm) y = ad::layer_norm(y, p(prefix + ".gamma"), p(prefix + ".beta"));
  return y;
}

Tensor encode_nodes(const Bound& p, const Tensor& node_in) { return mlp(p, "enc.node", node_in, true); }
Tensor encode_edges(const Bound& p, const Tensor& edge_in) { return mlp(p, "enc.edge", edge_in, true); }

Latents encode(const Bound& p, const Tensor& node_in, const Tensor& edge_in) {
  return {encode_nodes(p, node_in), encode_edges(p, edge_in)};
}

Tensor process(const Bound& p, const ModelConfig& config, Latents latents, const GraphContext& g) {
  Tensor v = latents.v;
  Tensor e = latents.e;
  for (std::size_t l = 0; l < config.layers; ++l) {
    const std::string pre = "proc." + std::to_string(l);
    const Tensor vi = ad::gather_rows(v, g.src);
    const Tensor vj = ad::gather_rows(v, g.dst);
    e = ad::add(mlp(p, pre + ".edge", ad::concat_cols({e, vi, vj}), true), e);
    const Tensor agg = ad::scatter_sum(e, g.src, g.n);
    v = ad::add(mlp(p, pre + ".node", ad::concat_cols({v, agg}), true), v);
  }
  return v;
}

RecurrentState zero_state(ad::Tape& tape, std::size_t n, std::size_t latent) {
  const auto r = static_cast<Eigen::Index>(n), c = static_cast<Eigen::Index>(latent);
  return {tape.constant(Matrix::Zero(r, c)), tape.constant(Matrix::Zero(r, c))};
}

RecurrentState gconv_lstm_step(const Bound& p, const ModelConfig& config, const Tensor& v,
                               const RecurrentState& state, const GraphContext& g) {
  const std::size_t k = config.cheb_order;
  const Tensor bv = cheb_basis(v, g, k);
  const Tensor bh = cheb_basis(state.h, g, k);
  auto pre = [&](const char* gate) {
    const std::string s(gate);
    return ad::add_rowvec(ad::add(ad::matmul(bv, p("lstm.W_x" + s)), ad::matmul(bh, p("lstm.W_h" + s))),
                          p("lstm.b_" + s));
  };
  const Tensor i = ad::sigmoid(pre("i"));
  const Tensor f = ad::sigmoid(pre("f"));
  const Tensor c_new = ad::add(ad::mul(f, state.c), ad::mul(i, ad::tanh(pre("c"))));
  const Tensor o = ad::sigmoid(ad::add(pre("o"), ad::mul_rowvec(c_new, p("lstm.w_co"))));
  return {c_new, ad::mul(o, ad::tanh(c_new))};
}

Tensor decode(const Bound& p, const Tensor& h) { return mlp(p, "dec", h, false); }

// ---------------------------------------------------------------- samples

PreparedSample prepare(const graph::GraphSample& sample, const graph::NormStats& stats) {
  PreparedSample s;
  s.graph = make_context(sample.src, sample.dst, sample.n_cells);
  s.features = sample.features;
  s.variable = sample.variable;
  s.props = sample.props;
  s.node_static = graph::normalize_static(sample, stats);
  s.edge_in = graph::normalize_edges(sample, stats);
  s.targets = graph::normalize_states(sample, stats);
  s.states = sample.states;
  s.saturation = sample.saturation;
  if (graph::uses_relperm(s.features) && stats.relperm.empty()) {
    throw InvalidConfig("prepare: stats lack the relperm channel required by the feature config");
  }
  return s;
}

Tensor node_input(ad::Tape& tape, const PreparedSample& s, const Tensor& dynamic,
                  const Eigen::RowVectorXd* relperm_norm) {
  std::vector<Tensor> parts{tape.constant(s.node_static), dynamic};
  if (graph::uses_relperm(s.features)) {
    if (relperm_norm == nullptr) throw InvalidArgument("node_input: relperm channel missing");
    parts.push_back(tape.constant(relperm_norm->transpose()));
  }
  return ad::concat_cols(parts);
}

Tensor node_input(ad::Tape& tape, const PreparedSample& s, const Tensor& dynamic, const Tensor& relperm_norm) {
  if (!graph::uses_relperm(s.features)) throw InvalidArgument("node_input: feature config has no relperm channel");
  return ad::concat_cols({tape.constant(s.node_static), dynamic, relperm_norm});
}

Tensor relperm_input(const Tensor& prediction, const PreparedSample& s, const graph::NormStats& stats,
                     std::size_t step) {
  ad::Tape& tape = *prediction.tape();
  const auto rows = prediction.rows();
  auto fill = [&](double v) { return tape.constant(Matrix::Constant(rows, 1, v)); };
  const graph::Moments d = stats.dynamic_at(step);
  const graph::Moments r = stats.relperm_at(step);
  const double s_max = s.props.s_g_max;
  const Tensor sat = ad::add(ad::scale(prediction, d.std), fill(d.mean));
  // clamp to [0, s_max] as relu(x) - relu(x - s_max)
  const Tensor clamped = ad::sub(ad::relu(sat), ad::relu(ad::sub(sat, fill(s_max))));
  const Tensor x = ad::scale(clamped, 1.0 / s_max);
  const Tensor krg = ad::scale(ad::mul(x, x), s.props.krg_end);
  return ad::scale(ad::sub(krg, fill(r.mean)), 1.0 / r.std);
}

StepOutput forward_step(const Bound& p, const ModelConfig& config, const PreparedSample& s,
                        const Tensor& node_in, const Tensor& edge_latent,
                        const std::optional<RecurrentState>& state) {
  if (node_in.cols() != static_cast<Eigen::Index>(config.node_in)) {
    throw ShapeMismatch("forward_step: node input width " + std::to_string(node_in.cols()) + " but model expects " +
                        std::to_string(config.node_in));
  }
  StepOutput out;
  out.processed = process(p, config, {encode_nodes(p, node_in), edge_latent}, s.graph);
  if (config.variant == Variant::mgn_lstm) {
    if (!state) throw InvalidArgument("forward_step: recurrent state required");
    out.state = gconv_lstm_step(p, config, out.processed, *state, s.graph);
    out.prediction = decode(p, out.state.h);
  } else {
    out.prediction = decode(p, out.processed);
  }
  return out;
}

Rollout rollout(const ParamSet& params, const ModelConfig& config, const PreparedSample& s,
                const graph::NormStats& stats, std::size_t n_steps) {
  if (n_steps < 1) throw InvalidArgument("rollout: n_steps must be >= 1");
  if (s.edge_in.cols() != static_cast<Eigen::Index>(config.edge_in)) {
    throw ShapeMismatch("rollout: edge input width does not match the model");
  }
  const auto n = static_cast<Eigen::Index>(s.n());
  const bool kr = graph::uses_relperm(s.features);
  Rollout r;
  r.normalized.resize(static_cast<Eigen::Index>(n_steps), n);
  r.physical.resize(static_cast<Eigen::Index>(n_steps), n);
  if (kr) r.relperm_in.resize(static_cast<Eigen::Index>(n_steps), n);

  Matrix dyn = s.targets.row(0).transpose();  // [n,1] normalized
  Eigen::RowVectorXd s_prev = kr ? Eigen::RowVectorXd(s.saturation.row(0)) : Eigen::RowVectorXd();
  Matrix c, h;
  if (config.variant == Variant::mgn_lstm) {
    c = Matrix::Zero(n, static_cast<Eigen::Index>(config.latent));
    h = c;
  }
  for (std::size_t step = 0; step < n_steps; ++step) {
    ad::Tape tape;
    const Bound p(tape, params, false);
    Eigen::RowVectorXd kr_norm;
    if (kr) {
      kr_norm = graph::relperm_channel(s_prev, s.props, stats, step);
      for (Eigen::Index i = 0; i < n; ++i) {
        r.relperm_in(static_cast<Eigen::Index>(step), i) = sim::relperm(sim::Phase::gas, s_prev(i), s.props);
      }
    }
    const Tensor in = node_input(tape, s, tape.constant(dyn), kr ? &kr_norm : nullptr);
    const Tensor edge_latent = encode_edges(p, tape.constant(s.edge_in));
    std::optional<RecurrentState> state;
    if (config.variant == Variant::mgn_lstm) state = RecurrentState{tape.constant(c), tape.constant(h)};
    const StepOutput out = forward_step(p, config, s, in, edge_latent, state);
    dyn = out.prediction.value();
    if (!dyn.allFinite()) throw NumericalBlowup("rollout: non-finite prediction at step " + std::to_string(step + 1));
    if (state) {
      c = out.state.c.value();
      h = out.state.h.value();
    }
    const graph::Moments m = stats.dynamic_at(step + 1);
    const auto row = static_cast<Eigen::Index>(step);
    r.normalized.row(row) = dyn.col(0).transpose();
    r.physical.row(row) = (dyn.col(0).transpose().array() * m.std + m.mean).matrix();
    if (kr) s_prev = r.physical.row(row);
  }
  return r;
}

}  // namespace plume::model
