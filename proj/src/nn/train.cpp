// Copyright 2026 The natres Authors
// SPDX-License-Identifier: Apache-2.0

#include "natres/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "natres/error.hpp"
#include "natres/simd/kernels.hpp"

namespace natres::nn {

std::string to_string(Optimizer o) {
  switch (o) {
    case Optimizer::sgd: return "sgd";
    case Optimizer::adam: return "adam";
    case Optimizer::adadelta: return "adadelta";
  }
  return "sgd";
}

std::string to_string(Scheduler s) {
  switch (s) {
    case Scheduler::step_decay: return "step-decay";
    case Scheduler::multi_step_decay: return "multi-step-decay";
    case Scheduler::cosine_annealing: return "cosine-annealing";
  }
  return "cosine-annealing";
}

Optimizer parse_optimizer(const std::string& s) {
  if (s == "sgd") return Optimizer::sgd;
  if (s == "adam") return Optimizer::adam;
  if (s == "adadelta") return Optimizer::adadelta;
  throw InvalidArgument("unknown optimizer '" + s + "'");
}

Scheduler parse_scheduler(const std::string& s) {
  if (s == "step-decay" || s == "step") return Scheduler::step_decay;
  if (s == "multi-step-decay" || s == "multistep") return Scheduler::multi_step_decay;
  if (s == "cosine-annealing" || s == "cosine") return Scheduler::cosine_annealing;
  throw InvalidArgument("unknown scheduler '" + s + "'");
}

void validate(const TrainConfig& cfg) {
  if (cfg.batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (!(cfg.weight_decay >= 0.0) || !std::isfinite(cfg.weight_decay)) {
    throw InvalidArgument("weight_decay must be finite and >= 0");
  }
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw InvalidArgument("learning_rate must be finite and > 0");
  }
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) {
    throw InvalidArgument("momentum must be in [0, 1)");
  }
  if (cfg.grad_clip_norm && !(*cfg.grad_clip_norm > 0.0)) {
    throw InvalidArgument("grad_clip_norm must be > 0 when enabled");
  }
  if (cfg.grad_noise_sigma && !(*cfg.grad_noise_sigma >= 0.0)) {
    throw InvalidArgument("grad_noise_sigma must be >= 0 when enabled");
  }
  if (!(cfg.label_noise_rate >= 0.0 && cfg.label_noise_rate <= 1.0)) {
    throw InvalidArgument("label_noise_rate must be in [0, 1]");
  }
  if (cfg.epochs < 0) throw InvalidArgument("epochs must be >= 0");
}

OptState make_opt_state(const TrainConfig& cfg, std::size_t param_count) {
  OptState s;
  s.kind = cfg.optimizer;
  s.momentum = cfg.optimizer == Optimizer::sgd ? cfg.momentum : 0.0;
  s.weight_decay = cfg.weight_decay;
  s.slot0.assign(param_count, 0.0f);
  if (cfg.optimizer != Optimizer::sgd) s.slot1.assign(param_count, 0.0f);
  return s;
}

void optimizer_step(OptState& state, std::span<float> params, std::span<const float> grad,
                    double lr) {
  if (params.size() != grad.size() || state.slot0.size() != params.size() ||
      (state.kind != Optimizer::sgd && state.slot1.size() != params.size())) {
    throw InvalidArgument("optimizer_step: shape mismatch");
  }
  if (!(lr >= 0.0)) throw InvalidArgument("optimizer_step: lr must be >= 0");
  ++state.step;
  const auto decay = static_cast<float>(state.weight_decay);
  const auto rate = static_cast<float>(lr);
  const std::size_t n = params.size();
  bool finite = true;
  switch (state.kind) {
    case Optimizer::sgd: {
      const auto mu = static_cast<float>(state.momentum);
      float* v = state.slot0.data();
      for (std::size_t i = 0; i < n; ++i) {
        v[i] = mu * v[i] + grad[i] + decay * params[i];
        params[i] -= rate * v[i];
        finite &= std::isfinite(params[i]);
      }
      break;
    }
    case Optimizer::adam: {
      const double t = static_cast<double>(state.step);
      const double bc1 = 1.0 - std::pow(kAdamBeta1, t);
      const double bc2 = 1.0 - std::pow(kAdamBeta2, t);
      float* m = state.slot0.data();
      float* v = state.slot1.data();
      for (std::size_t i = 0; i < n; ++i) {
        const double g = grad[i] + decay * params[i];
        const double mi = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * g;
        const double vi = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * g * g;
        m[i] = static_cast<float>(mi);
        v[i] = static_cast<float>(vi);
        params[i] -= static_cast<float>(lr * (mi / bc1) / (std::sqrt(vi / bc2) + kOptEpsilon));
        finite &= std::isfinite(params[i]);
      }
      break;
    }
    case Optimizer::adadelta: {
      constexpr double rho = kAdadeltaRho;
      float* sq_grad = state.slot0.data();
      float* sq_delta = state.slot1.data();
      for (std::size_t i = 0; i < n; ++i) {
        const double g = grad[i] + decay * params[i];
        const double eg = rho * sq_grad[i] + (1.0 - rho) * g * g;
        const double delta = std::sqrt(sq_delta[i] + kOptEpsilon) / std::sqrt(eg + kOptEpsilon) * g;
        sq_grad[i] = static_cast<float>(eg);
        sq_delta[i] = static_cast<float>(rho * sq_delta[i] + (1.0 - rho) * delta * delta);
        params[i] -= static_cast<float>(lr * delta);
        finite &= std::isfinite(params[i]);
      }
      break;
    }
  }
  if (!finite) throw NumericError("optimizer_step: non-finite parameter update");
}

double lr_at(Scheduler scheduler, double base_lr, int epoch, int total_epochs) {
  if (total_epochs <= 0 || epoch < 0 || epoch >= total_epochs) {
    throw InvalidArgument("lr_at: epoch must lie in [0, total_epochs)");
  }
  switch (scheduler) {
    case Scheduler::step_decay: {
      const int step = (total_epochs + 2) / 3;
      return base_lr * std::pow(0.1, epoch / step);
    }
    case Scheduler::multi_step_decay: {
      int passed = 0;
      if (epoch >= 0.5 * total_epochs) ++passed;
      if (epoch >= 0.75 * total_epochs) ++passed;
      return base_lr * std::pow(0.1, passed);
    }
    case Scheduler::cosine_annealing:
      return base_lr * (1.0 + std::cos(std::numbers::pi * epoch / total_epochs)) / 2.0;
  }
  return base_lr;
}

void apply_label_noise(std::span<int> labels, int num_classes, double rate, Rng& rng) {
  if (rate <= 0.0) return;
  for (int& y : labels) {
    if (rng.bernoulli(rate)) y = static_cast<int>(rng.uniform_int(0, num_classes - 1));
  }
}

LossGrad regularized_gradient(const Network& net, std::span<const float> params,
                              const Batch& batch, const TrainConfig& cfg, Rng& rng,
                              Workspace& ws) {
  std::vector<int> noisy;
  Batch effective = batch;
  if (cfg.label_noise_rate > 0.0) {
    noisy.resize(batch.size());
    for (std::size_t k = 0; k < batch.size(); ++k) noisy[k] = batch.label(k);
    apply_label_noise(noisy, net.num_classes(), cfg.label_noise_rate, rng);
    effective.labels = noisy;
  }
  LossGrad lg = loss_and_grad(net, params, effective, ws, &rng);
  if (cfg.grad_clip_norm) {
    const double norm = std::sqrt(simd::sum_sq(lg.grad));
    if (norm > *cfg.grad_clip_norm) {
      simd::scale(static_cast<float>(*cfg.grad_clip_norm / norm), lg.grad);
    }
  }
  if (cfg.grad_noise_sigma && *cfg.grad_noise_sigma > 0.0) {
    const double sigma = *cfg.grad_noise_sigma;
    for (float& g : lg.grad) g += static_cast<float>(sigma * rng.normal());
  }
  return lg;
}

TrainResult train_from(ModelParams initial, const data::Dataset& train_set,
                       const ModelSpec& spec, const TrainConfig& cfg, EpochWindow window) {
  validate(cfg);
  if (train_set.empty()) throw InvalidArgument("train: empty dataset");
  const Network net(spec);
  net.check_params(initial.values);
  if (train_set.input_len() != net.input_len()) {
    throw InvalidArgument("train: dataset input length does not match the model");
  }
  if (train_set.num_classes() > spec.num_classes) {
    throw InvalidArgument("train: dataset has more classes than the model outputs");
  }
  const int total = window.total_epochs > 0 ? window.total_epochs : cfg.epochs;
  if (window.first_epoch < 0 || window.first_epoch + cfg.epochs > total) {
    throw InvalidArgument("train: epoch window exceeds the schedule length");
  }

  TrainResult result;
  result.params = std::move(initial);
  Workspace ws = net.make_workspace();
  OptState state = make_opt_state(cfg, net.param_count());
  const std::size_t n = train_set.size();
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  std::vector<std::size_t> order(n);
  for (int e = 0; e < cfg.epochs; ++e) {
    const int epoch = window.first_epoch + e;
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng shuffle_rng(derive_seed(cfg.seed, "shuffle", {static_cast<std::uint64_t>(epoch)}));
    shuffle_rng.shuffle(order);
    const double lr = lr_at(cfg.scheduler, cfg.learning_rate, epoch, total);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t len = std::min(batch, n - start);
      Batch b{&train_set, std::span<const std::size_t>(order.data() + start, len), {}};
      Rng step_rng(derive_seed(cfg.seed, "step",
                               {static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(batches)}));
      try {
        LossGrad lg = regularized_gradient(net, result.params.values, b, cfg, step_rng, ws);
        optimizer_step(state, result.params.values, lg.grad, lr);
        loss_sum += lg.loss;
      } catch (const NumericError& err) {
        throw NumericError(std::string(err.what()) + " at step " + std::to_string(result.steps),
                           result.steps);
      }
      ++batches;
      ++result.steps;
    }
    result.history.push_back({loss_sum / static_cast<double>(batches), lr});
  }
  return result;
}

TrainResult train(const data::Dataset& train_set, const ModelSpec& spec, const TrainConfig& cfg) {
  return train_from(init_model(spec, cfg.seed), train_set, spec, cfg);
}

EvalResult evaluate(const ModelParams& params, const ModelSpec& spec,
                    const data::Dataset& dataset) {
  if (dataset.empty()) throw InvalidArgument("evaluate: empty dataset");
  const Network net(spec);
  net.check_params(params.values);
  if (dataset.input_len() != net.input_len()) {
    throw InvalidArgument("evaluate: dataset input length does not match the model");
  }
  Workspace ws = net.make_workspace();
  const auto classes = static_cast<std::size_t>(std::max(dataset.num_classes(), spec.num_classes));
  std::vector<ClassAccuracy> table(classes);
  EvalResult out;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto logits = net.forward(params.values, dataset.row(i), ws);
    const int y = dataset.label(i);
    auto& entry = table[static_cast<std::size_t>(y)];
    ++entry.count;
    if (argmax(logits) == y) {
      ++entry.correct;
      ++out.correct;
    }
  }
  out.total = dataset.size();
  out.accuracy = static_cast<double>(out.correct) / static_cast<double>(out.total);
  for (std::size_t c = 0; c < classes; ++c) {
    if (table[c].count == 0) continue;
    table[c].label = static_cast<int>(c);
    out.per_class.push_back(table[c]);
  }
  return out;
}

}  // namespace natres::nn
