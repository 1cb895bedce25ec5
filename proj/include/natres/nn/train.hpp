// Copyright 2026 The natres Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "natres/data/dataset.hpp"
#include "natres/nn/model.hpp"
#include "natres/rng.hpp"

namespace natres::nn {

enum class Optimizer { sgd, adam, adadelta };
enum class Scheduler { step_decay, multi_step_decay, cosine_annealing };

std::string to_string(Optimizer o);
std::string to_string(Scheduler s);
Optimizer parse_optimizer(const std::string& s);
Scheduler parse_scheduler(const std::string& s);

struct TrainConfig {
  int batch_size = 64;
  double weight_decay = 0.0;
  double learning_rate = 0.01;
  double momentum = 0.0;  // SGD only
  Optimizer optimizer = Optimizer::sgd;
  Scheduler scheduler = Scheduler::cosine_annealing;
  std::optional<double> grad_clip_norm;    // disabled when empty
  std::optional<double> grad_noise_sigma;  // disabled when empty
  double label_noise_rate = 0.0;
  int epochs = 10;
  std::uint64_t seed = 0;
};

// Structural domain checks (positive rates, probabilities in range). The
// narrower search ranges live in the search space.
void validate(const TrainConfig& cfg);

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdadeltaRho = 0.9;
inline constexpr double kOptEpsilon = 1e-8;

struct OptState {
  Optimizer kind = Optimizer::sgd;
  double momentum = 0.0;
  double weight_decay = 0.0;
  // sgd: velocity. adam: first moment. adadelta: running E[g^2].
  std::vector<float> slot0;
  // adam: second moment. adadelta: running E[dx^2].
  std::vector<float> slot1;
  std::int64_t step = 0;
};

OptState make_opt_state(const TrainConfig& cfg, std::size_t param_count);

// One update. Weight decay enters as an additive term decay * theta on the
// gradient for every optimizer. Throws NumericError on a non-finite result.
void optimizer_step(OptState& state, std::span<float> params,
                    std::span<const float> grad, double lr);

// 0 <= epoch < total_epochs.
double lr_at(Scheduler scheduler, double base_lr, int epoch, int total_epochs);

// Replaces each label with a uniformly random class (possibly the same one)
// with probability rate.
void apply_label_noise(std::span<int> labels, int num_classes, double rate, Rng& rng);

// Label noise -> loss_and_grad (with dropout) -> clip total norm -> add
// Gaussian noise. All randomness comes from rng in that order.
LossGrad regularized_gradient(const Network& net, std::span<const float> params,
                              const Batch& batch, const TrainConfig& cfg, Rng& rng,
                              Workspace& ws);

struct EpochStats {
  double mean_loss = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochStats> history;
  std::int64_t steps = 0;
};

// Epoch range of a longer schedule: lr and random streams are keyed by the
// global epoch index first_epoch + e, so a run split into windows replays a
// single long run (for stateless optimizers).
struct EpochWindow {
  int first_epoch = 0;
  int total_epochs = 0;  // schedule length; 0 means cfg.epochs
};

TrainResult train_from(ModelParams initial, const data::Dataset& train_set,
                       const ModelSpec& spec, const TrainConfig& cfg,
                       EpochWindow window = {});

// init_model(spec, cfg.seed) followed by cfg.epochs epochs.
TrainResult train(const data::Dataset& train_set, const ModelSpec& spec,
                  const TrainConfig& cfg);

struct ClassAccuracy {
  int label = 0;
  std::size_t count = 0;
  std::size_t correct = 0;
  double accuracy() const { return count ? static_cast<double>(correct) / count : 0.0; }
};

struct EvalResult {
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
  std::vector<ClassAccuracy> per_class;  // classes present in the dataset only
};

EvalResult evaluate(const ModelParams& params, const ModelSpec& spec,
                    const data::Dataset& dataset);

}  // namespace natres::nn
