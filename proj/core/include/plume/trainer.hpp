#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "plume/graph.hpp"
#include "plume/model.hpp"
#include "plume/tensor.hpp"

namespace plume::train {

struct TrainConfig {
  std::size_t epochs = 500;
  std::size_t batch_size = 10;
  double base_lr = 1e-3;
  double floor_lr = 1e-6;
  double weight_decay = 5e-4;
  double clip_norm = 1.0;  // <= 0 disables clipping
  double noise_scale = 0.05;
  double val_fraction = 0.1;
  bool teacher_forcing = false;
  std::size_t n_steps = 11;  // training horizon
  std::uint64_t seed = 0;

  void validate() const;
};

struct AdamState {
  static constexpr double beta1 = 0.9;
  static constexpr double beta2 = 0.999;
  static constexpr double eps = 1e-8;
  std::vector<ad::Matrix> m;
  std::vector<ad::Matrix> v;
  std::size_t step = 0;
};

AdamState make_adam(const std::vector<ad::Matrix>& params);
/// Decoupled weight decay p <- p - lr*wd*p, then a bias-corrected Adam update.
void adam_step(std::vector<ad::Matrix>& params, const std::vector<ad::Matrix>& grads, AdamState& state,
               double lr, double weight_decay);

/// floor + (base - floor) * (1 + cos(pi * epoch / total)) / 2
double cosine_lr(std::size_t epoch, std::size_t total, double base_lr, double floor_lr);

/// Permutation of 0..n-1 that depends only on (seed, epoch).
std::vector<std::size_t> shuffle_order(std::size_t n, std::uint64_t seed, std::size_t epoch);

/// Scales grads in place so their global L2 norm is at most max_norm;
/// returns the norm before clipping.
double clip_global_norm(std::vector<ad::Matrix>& grads, double max_norm);

/// Per-step squared-error sums S_n (n = 1..n_steps) of one sample's unrolled
/// model on `p`'s tape. `forced` (rows 0..n_steps-1, normalized) replaces the
/// model's own previous prediction as input when given.
std::vector<ad::Tensor> unroll_squared_errors(const model::Bound& p, const model::ModelConfig& config,
                                              const model::PreparedSample& s, const graph::NormStats& stats,
                                              std::size_t n_steps, const ad::Matrix* forced = nullptr);

/// sum_n sqrt(S_n / n_B): S_n sums squared errors over every node of every
/// sample and n_B is the total node count of the batch (per-node RMSE).
ad::Tensor sequence_loss(const model::Bound& p, const model::ModelConfig& config,
                         const std::vector<const model::PreparedSample*>& batch, const graph::NormStats& stats,
                         std::size_t n_steps, const std::vector<const ad::Matrix*>& forced = {});

struct LossGrad {
  double loss = 0.0;
  std::vector<ad::Matrix> grads;
};

/// Value and gradient of sequence_loss. Batches of more than one sample are
/// evaluated one sample per tape: a forward pass fixes the per-step weights
/// 1/(2 sqrt(S_n n_B)), then each sample backpropagates its weighted S_{n,b}.
LossGrad sequence_loss_grad(const model::ParamSet& params, const model::ModelConfig& config,
                            const std::vector<const model::PreparedSample*>& batch,
                            const graph::NormStats& stats, std::size_t n_steps,
                            const std::vector<const ad::Matrix*>& forced = {});

/// Forward-only autoregressive sequence loss of one sample.
double rollout_loss(const model::ParamSet& params, const model::ModelConfig& config,
                    const model::PreparedSample& s, const graph::NormStats& stats, std::size_t n_steps);

/// Population std of the normalized dynamic variable over snapshots 0..n_steps.
double noise_reference_std(const std::vector<model::PreparedSample>& data, std::size_t n_steps);

/// Normalized inputs for steps 0..n_steps-1 plus N(0, noise_std^2) noise.
ad::Matrix noisy_inputs(const model::PreparedSample& s, std::size_t n_steps, double noise_std,
                        std::mt19937_64& rng);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;  // NaN without a validation split
};

struct TrainResult {
  model::ParamSet params;  // best validation checkpoint (final params without validation)
  model::ParamSet final_params;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double noise_std = 0.0;  // mgn variant only
  std::size_t n_train = 0;
  std::size_t n_val = 0;
};

/// Full-sequence BPTT over own-prediction rollouts (teacher forcing behind
/// the config flag).
TrainResult train_mgn_lstm(const std::vector<model::PreparedSample>& data, const model::ModelConfig& config,
                           const TrainConfig& train, const graph::NormStats& stats, std::ostream* log = nullptr);
/// Next-step regression from noisy true states.
TrainResult train_mgn_noise(const std::vector<model::PreparedSample>& data, const model::ModelConfig& config,
                            const TrainConfig& train, const graph::NormStats& stats, std::ostream* log = nullptr);
TrainResult train_model(const std::vector<model::PreparedSample>& data, const model::ModelConfig& config,
                        const TrainConfig& train, const graph::NormStats& stats, std::ostream* log = nullptr);

/// CSV: epoch,lr,train_loss,val_loss
void write_training_log(std::ostream& out, const std::vector<EpochRecord>& history);

}  // namespace plume::train
