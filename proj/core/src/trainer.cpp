#include "plume/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include "plume/error.hpp"

#ifdef __GLIBC__
#include <malloc.h>
#endif

namespace plume::train {

using ad::Matrix;
using ad::Tensor;

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidConfig("training: epochs must be >= 1");
  if (batch_size < 1) throw InvalidConfig("training: batch size must be >= 1");
  if (!(base_lr > 0.0)) throw InvalidConfig("training: learning rate must be > 0");
  if (!(floor_lr >= 0.0 && floor_lr <= base_lr)) throw InvalidConfig("training: floor lr must be in [0, base lr]");
  if (!(weight_decay >= 0.0)) throw InvalidConfig("training: weight decay must be >= 0");
  if (!(noise_scale >= 0.0)) throw InvalidConfig("training: noise scale must be >= 0");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw InvalidConfig("training: val fraction must be in [0,1)");
  if (n_steps < 1) throw InvalidConfig("training: n_steps must be >= 1");
}

// ---------------------------------------------------------------- optimizer

AdamState make_adam(const std::vector<Matrix>& params) {
  AdamState s;
  for (const Matrix& p : params) {
    s.m.push_back(Matrix::Zero(p.rows(), p.cols()));
    s.v.push_back(Matrix::Zero(p.rows(), p.cols()));
  }
  return s;
}

void adam_step(std::vector<Matrix>& params, const std::vector<Matrix>& grads, AdamState& state, double lr,
               double weight_decay) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw ShapeMismatch("adam_step: parameter, gradient and moment counts differ");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(AdamState::beta1, t);
  const double c2 = 1.0 - std::pow(AdamState::beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix& p = params[k];
    const Matrix& g = grads[k];
    if (g.rows() != p.rows() || g.cols() != p.cols()) throw ShapeMismatch("adam_step: gradient shape mismatch");
    if (weight_decay != 0.0) p *= (1.0 - lr * weight_decay);
    state.m[k] = AdamState::beta1 * state.m[k] + (1.0 - AdamState::beta1) * g;
    state.v[k] = AdamState::beta2 * state.v[k] + (1.0 - AdamState::beta2) * g.cwiseAbs2();
    p.array() -= lr * (state.m[k].array() / c1) / ((state.v[k].array() / c2).sqrt() + AdamState::eps);
  }
}

double cosine_lr(std::size_t epoch, std::size_t total, double base_lr, double floor_lr) {
  if (total == 0) throw InvalidArgument("cosine_lr: total epochs must be >= 1");
  const double x = static_cast<double>(epoch) / static_cast<double>(total);
  return floor_lr + 0.5 * (base_lr - floor_lr) * (1.0 + std::cos(std::numbers::pi * x));
}

std::vector<std::size_t> shuffle_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), 0x5eedu};
  std::mt19937_64 rng(seq);
  // Fisher-Yates with explicit index draws, independent of the library's std::shuffle
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

double clip_global_norm(std::vector<Matrix>& grads, double max_norm) {
  double sq = 0.0;
  for (const Matrix& g : grads) sq += g.squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double f = max_norm / norm;
    for (Matrix& g : grads) g *= f;
  }
  return norm;
}

// ---------------------------------------------------------------- losses

std::vector<Tensor> unroll_squared_errors(const model::Bound& p, const model::ModelConfig& config,
                                          const model::PreparedSample& s, const graph::NormStats& stats,
                                          std::size_t n_steps, const Matrix* forced) {
  if (n_steps < 1 || n_steps > s.n_steps()) throw InvalidArgument("unroll: n_steps outside the sample horizon");
  if (forced && (forced->rows() < static_cast<Eigen::Index>(n_steps) ||
                 forced->cols() != static_cast<Eigen::Index>(s.n()))) {
    throw ShapeMismatch("unroll: forced input matrix has the wrong shape");
  }
  ad::Tape& tape = p.tape();
  const bool kr = graph::uses_relperm(s.features);
  const Tensor edge_latent = model::encode_edges(p, tape.constant(s.edge_in));
  std::optional<model::RecurrentState> state;
  if (config.variant == model::Variant::mgn_lstm) state = model::zero_state(tape, s.n(), config.latent);

  Tensor dyn = tape.constant(s.targets.row(0).transpose());
  Eigen::RowVectorXd s_prev = kr ? Eigen::RowVectorXd(s.saturation.row(0)) : Eigen::RowVectorXd();
  std::vector<Tensor> errors;
  errors.reserve(n_steps);
  for (std::size_t step = 0; step < n_steps; ++step) {
    const auto row = static_cast<Eigen::Index>(step);
    if (forced) {
      dyn = tape.constant(forced->row(row).transpose());
      if (kr) {
        const graph::Moments m = stats.dynamic_at(step);
        s_prev = (forced->row(row).array() * m.std + m.mean).matrix();
      }
    }
    Tensor in;
    if (kr && !forced && step > 0) {
      in = model::node_input(tape, s, dyn, model::relperm_input(dyn, s, stats, step));
    } else {
      Eigen::RowVectorXd kr_norm;
      if (kr) kr_norm = graph::relperm_channel(s_prev, s.props, stats, step);
      in = model::node_input(tape, s, dyn, kr ? &kr_norm : nullptr);
    }
    const model::StepOutput out = model::forward_step(p, config, s, in, edge_latent, state);
    const Tensor target = tape.constant(s.targets.row(row + 1).transpose());
    errors.push_back(ad::sum_squares(ad::sub(out.prediction, target)));
    dyn = out.prediction;
    if (state) state = out.state;
  }
  return errors;
}

namespace {

const Matrix* forced_at(const std::vector<const Matrix*>& forced, std::size_t b) {
  return forced.empty() ? nullptr : forced.at(b);
}

std::size_t total_nodes(const std::vector<const model::PreparedSample*>& batch) {
  std::size_t n = 0;
  for (const auto* s : batch) n += s->n();
  return n;
}

}  // namespace

Tensor sequence_loss(const model::Bound& p, const model::ModelConfig& config,
                     const std::vector<const model::PreparedSample*>& batch, const graph::NormStats& stats,
                     std::size_t n_steps, const std::vector<const Matrix*>& forced) {
  if (batch.empty()) throw InvalidArgument("sequence_loss: empty batch");
  if (!forced.empty() && forced.size() != batch.size()) throw ShapeMismatch("sequence_loss: forced/batch size");
  std::vector<Tensor> per_step;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto errs = unroll_squared_errors(p, config, *batch[b], stats, n_steps, forced_at(forced, b));
    if (per_step.empty()) {
      per_step = errs;
    } else {
      for (std::size_t n = 0; n < n_steps; ++n) per_step[n] = ad::add(per_step[n], errs[n]);
    }
  }
  const double inv_nb = 1.0 / static_cast<double>(total_nodes(batch));
  Tensor loss = ad::sqrt(ad::scale(per_step[0], inv_nb));
  for (std::size_t n = 1; n < n_steps; ++n) loss = ad::add(loss, ad::sqrt(ad::scale(per_step[n], inv_nb)));
  return loss;
}

LossGrad sequence_loss_grad(const model::ParamSet& params, const model::ModelConfig& config,
                            const std::vector<const model::PreparedSample*>& batch, const graph::NormStats& stats,
                            std::size_t n_steps, const std::vector<const Matrix*>& forced) {
  if (batch.empty()) throw InvalidArgument("sequence_loss_grad: empty batch");
  LossGrad out;
  if (batch.size() == 1) {
    ad::Tape tape;
    const model::Bound p(tape, params, true);
    const Tensor loss = sequence_loss(p, config, batch, stats, n_steps, forced);
    out.loss = loss.item();
    tape.backward(loss);
    for (const Tensor& leaf : p.leaves()) out.grads.push_back(leaf.grad());
    return out;
  }

  std::vector<double> total(n_steps, 0.0);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    ad::Tape tape;
    const model::Bound p(tape, params, false);
    const auto errs = unroll_squared_errors(p, config, *batch[b], stats, n_steps, forced_at(forced, b));
    for (std::size_t n = 0; n < n_steps; ++n) total[n] += errs[n].item();
  }
  const double nb = static_cast<double>(total_nodes(batch));
  std::vector<double> weight(n_steps, 0.0);
  for (std::size_t n = 0; n < n_steps; ++n) {
    out.loss += std::sqrt(total[n] / nb);
    if (total[n] > 0.0) weight[n] = 1.0 / (2.0 * std::sqrt(total[n] * nb));
  }
  if (!std::isfinite(out.loss)) return out;

  for (const Matrix& v : params.values()) out.grads.push_back(Matrix::Zero(v.rows(), v.cols()));
  for (std::size_t b = 0; b < batch.size(); ++b) {
    ad::Tape tape;
    const model::Bound p(tape, params, true);
    const auto errs = unroll_squared_errors(p, config, *batch[b], stats, n_steps, forced_at(forced, b));
    Tensor surrogate = ad::scale(errs[0], weight[0]);
    for (std::size_t n = 1; n < n_steps; ++n) surrogate = ad::add(surrogate, ad::scale(errs[n], weight[n]));
    tape.backward(surrogate);
    for (std::size_t k = 0; k < params.size(); ++k) {
      if (p.leaves()[k].has_grad()) out.grads[k] += p.leaves()[k].grad();
    }
  }
  return out;
}

double rollout_loss(const model::ParamSet& params, const model::ModelConfig& config,
                    const model::PreparedSample& s, const graph::NormStats& stats, std::size_t n_steps) {
  const model::Rollout r = model::rollout(params, config, s, stats, n_steps);
  double loss = 0.0;
  for (std::size_t n = 0; n < n_steps; ++n) {
    const auto row = static_cast<Eigen::Index>(n);
    const double sq = (r.normalized.row(row) - s.targets.row(row + 1)).squaredNorm();
    loss += std::sqrt(sq / static_cast<double>(s.n()));
  }
  return loss;
}

double noise_reference_std(const std::vector<model::PreparedSample>& data, std::size_t n_steps) {
  double sum = 0.0, count = 0.0;
  for (const auto& s : data) {
    const auto block = s.targets.topRows(static_cast<Eigen::Index>(n_steps + 1));
    sum += block.sum();
    count += static_cast<double>(block.size());
  }
  if (count == 0.0) throw InvalidArgument("noise_reference_std: no data");
  const double mean = sum / count;
  double ss = 0.0;
  for (const auto& s : data) {
    ss += (s.targets.topRows(static_cast<Eigen::Index>(n_steps + 1)).array() - mean).square().sum();
  }
  return std::sqrt(ss / count);
}

Matrix noisy_inputs(const model::PreparedSample& s, std::size_t n_steps, double noise_std, std::mt19937_64& rng) {
  Matrix x = s.targets.topRows(static_cast<Eigen::Index>(n_steps));
  if (noise_std > 0.0) {
    std::normal_distribution<double> normal(0.0, noise_std);
    for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] += normal(rng);
  }
  return x;
}

// ---------------------------------------------------------------- training loops

namespace {

using BatchLoss = std::function<LossGrad(const model::ParamSet&, const std::vector<std::size_t>& batch,
                                         std::size_t epoch, std::size_t batch_index)>;

TrainResult run_training(const std::vector<model::PreparedSample>& data, const model::ModelConfig& config,
                         const TrainConfig& tc, const graph::NormStats& stats, std::ostream* log,
                         std::size_t n_train, const BatchLoss& batch_loss, TrainResult result) {
  model::ParamSet params = model::init_params(config, tc.seed);
  AdamState adam = make_adam(params.values());
  const std::size_t n_val = data.size() - n_train;
  result.n_train = n_train;
  result.n_val = n_val;

  double best_val = std::numeric_limits<double>::infinity();
  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    const double lr = cosine_lr(epoch, tc.epochs, tc.base_lr, tc.floor_lr);
    const auto order = shuffle_order(n_train, tc.seed, epoch);
    double loss_sum = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < n_train; start += tc.batch_size) {
      const std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                           order.begin() + static_cast<std::ptrdiff_t>(std::min(n_train, start + tc.batch_size)));
      LossGrad lg = batch_loss(params, batch, epoch, n_batches);
      bool finite = std::isfinite(lg.loss);
      for (const Matrix& g : lg.grads) finite = finite && g.allFinite();
      if (!finite) {
        std::ostringstream msg;
        msg << "training diverged: non-finite loss or gradient at epoch " << epoch + 1 << ", batch " << n_batches + 1;
        throw NumericalError(msg.str());
      }
      clip_global_norm(lg.grads, tc.clip_norm);
      adam_step(params.values(), lg.grads, adam, lr, tc.weight_decay);
      loss_sum += lg.loss;
      ++n_batches;
    }

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.lr = lr;
    rec.train_loss = loss_sum / static_cast<double>(n_batches);
    rec.val_loss = std::numeric_limits<double>::quiet_NaN();
    if (n_val > 0) {
      double v = 0.0;
      for (std::size_t k = n_train; k < data.size(); ++k) v += rollout_loss(params, config, data[k], stats, tc.n_steps);
      rec.val_loss = v / static_cast<double>(n_val);
      if (rec.val_loss < best_val) {
        best_val = rec.val_loss;
        result.params = params;
        result.best_epoch = rec.epoch;
      }
    }
    result.history.push_back(rec);
    if (log) {
      *log << "epoch " << rec.epoch << "/" << tc.epochs << " lr " << std::setprecision(4) << rec.lr << " train "
           << std::setprecision(6) << rec.train_loss;
      if (n_val > 0) *log << " val " << rec.val_loss;
      *log << '\n';
    }
  }
  result.final_params = params;
  if (n_val == 0) {
    result.params = params;
    result.best_epoch = tc.epochs;
  }
  return result;
}

std::size_t split_train(std::size_t n, const TrainConfig& tc) {
  if (n < 1) throw InvalidArgument("training: need at least one sample");
  const auto n_val = static_cast<std::size_t>(std::floor(tc.val_fraction * static_cast<double>(n)));
  return n - std::min(n_val, n - 1);
}

void check_data(const std::vector<model::PreparedSample>& data, const model::ModelConfig& config,
                const TrainConfig& tc) {
  config.validate();
  tc.validate();
  for (const auto& s : data) {
    if (s.n_steps() < tc.n_steps) throw InvalidConfig("training: sample has fewer steps than the training horizon");
    if (s.edge_in.cols() != static_cast<Eigen::Index>(config.edge_in)) {
      throw InvalidConfig("training: edge width of the data does not match the model config");
    }
  }
}

}  // namespace

TrainResult train_mgn_lstm(const std::vector<model::PreparedSample>& data, const model::ModelConfig& config,
                           const TrainConfig& tc, const graph::NormStats& stats, std::ostream* log) {
  if (config.variant != model::Variant::mgn_lstm) throw InvalidConfig("train_mgn_lstm: variant must be mgn_lstm");
  check_data(data, config, tc);
  const std::size_t n_train = split_train(data.size(), tc);
  BatchLoss loss = [&](const model::ParamSet& params, const std::vector<std::size_t>& idx, std::size_t,
                       std::size_t) {
    std::vector<const model::PreparedSample*> batch;
    std::vector<const Matrix*> forced;
    std::vector<Matrix> teacher;
    teacher.reserve(idx.size());
    for (std::size_t k : idx) {
      batch.push_back(&data[k]);
      if (tc.teacher_forcing) {
        teacher.push_back(data[k].targets.topRows(static_cast<Eigen::Index>(tc.n_steps)));
        forced.push_back(&teacher.back());
      }
    }
    return sequence_loss_grad(params, config, batch, stats, tc.n_steps, forced);
  };
  return run_training(data, config, tc, stats, log, n_train, loss, TrainResult{});
}

TrainResult train_mgn_noise(const std::vector<model::PreparedSample>& data, const model::ModelConfig& config,
                            const TrainConfig& tc, const graph::NormStats& stats, std::ostream* log) {
  if (config.variant != model::Variant::mgn) throw InvalidConfig("train_mgn_noise: variant must be mgn");
  check_data(data, config, tc);
  const std::size_t n_train = split_train(data.size(), tc);
  const std::vector<model::PreparedSample> train_part(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(n_train));
  TrainResult init;
  init.noise_std = tc.noise_scale * noise_reference_std(train_part, tc.n_steps);
  if (log) *log << "noise std (normalized units) " << init.noise_std << '\n';
  const double noise_std = init.noise_std;
  BatchLoss loss = [&, noise_std](const model::ParamSet& params, const std::vector<std::size_t>& idx,
                                  std::size_t epoch, std::size_t batch_index) {
    std::seed_seq seq{static_cast<std::uint32_t>(tc.seed), static_cast<std::uint32_t>(tc.seed >> 32),
                      static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(batch_index), 0x401eu};
    std::mt19937_64 rng(seq);
    std::vector<const model::PreparedSample*> batch;
    std::vector<Matrix> inputs;
    inputs.reserve(idx.size());
    std::vector<const Matrix*> forced;
    for (std::size_t k : idx) {
      batch.push_back(&data[k]);
      inputs.push_back(noisy_inputs(data[k], tc.n_steps, noise_std, rng));
      forced.push_back(&inputs.back());
    }
    return sequence_loss_grad(params, config, batch, stats, tc.n_steps, forced);
  };
  return run_training(data, config, tc, stats, log, n_train, loss, std::move(init));
}

TrainResult train_model(const std::vector<model::PreparedSample>& data, const model::ModelConfig& config,
                        const TrainConfig& tc, const graph::NormStats& stats, std::ostream* log) {
#ifdef __GLIBC__
  // Tapes allocate and release large blocks every batch; keep them in the heap.
  static const bool tuned = [] {
    mallopt(M_MMAP_THRESHOLD, 32 << 20);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
    return true;
  }();
  (void)tuned;
#endif
  return config.variant == model::Variant::mgn_lstm ? train_mgn_lstm(data, config, tc, stats, log)
                                                    : train_mgn_noise(data, config, tc, stats, log);
}

void write_training_log(std::ostream& out, const std::vector<EpochRecord>& history) {
  const auto prec = out.precision();
  out << std::setprecision(17);
  out << "epoch,lr,train_loss,val_loss\n";
  for (const EpochRecord& r : history) {
    out << r.epoch << ',' << r.lr << ',' << r.train_loss << ',';
    if (std::isfinite(r.val_loss)) out << r.val_loss;
    out << '\n';
  }
  out.precision(prec);
}

}  // namespace plume::train
