// Copyright 2026 The natres Authors
// SPDX-License-Identifier: Apache-2.0

#include "natres/fed/fedavg.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "natres/error.hpp"
#include "natres/parallel.hpp"
#include "natres/rng.hpp"
#include "natres/simd/kernels.hpp"

namespace natres::fed {

void validate(const FedConfig& cfg) {
  if (cfg.num_users < 1) throw InvalidArgument("federated: num_users must be >= 1");
  if (cfg.rounds < 0) throw InvalidArgument("federated: rounds must be >= 0");
  if (cfg.round_size < 1 || cfg.round_size > cfg.num_users) {
    throw InvalidArgument("federated: round_size must be in [1, num_users]");
  }
  if (cfg.local_epochs < 1) throw InvalidArgument("federated: local_epochs must be >= 1");
  if (!(cfg.global_lr >= 0.0) || !std::isfinite(cfg.global_lr)) {
    throw InvalidArgument("federated: global_lr must be finite and >= 0");
  }
  if (cfg.clip_bound && !(*cfg.clip_bound > 0.0)) throw InvalidArgument("federated: clip_bound must be > 0");
  if (!(cfg.noise_sigma >= 0.0)) throw InvalidArgument("federated: noise_sigma must be >= 0");
  if (!(cfg.user_poison_rate >= 0.0 && cfg.user_poison_rate <= 1.0)) {
    throw InvalidArgument("federated: user_poison_rate must be in [0, 1]");
  }
  nn::validate(cfg.local);
}

std::vector<int> pick_compromised(int num_users, double fraction, std::uint64_t seed) {
  const auto idx = poison::sample_indices(static_cast<std::size_t>(num_users), fraction,
                                          derive_seed(seed, "compromised"));
  return {idx.begin(), idx.end()};
}

FedRunResult fed_train(const FedConfig& cfg, const nn::ModelSpec& model, const FedData& data,
                       const std::vector<int>& compromised, const poison::PoisonSpec& spec,
                       int workers) {
  validate(cfg);
  if (data.train == nullptr) throw InvalidArgument("fed_train: no training data");
  if (data.shards.size() != static_cast<std::size_t>(cfg.num_users)) {
    throw InvalidArgument("fed_train: shard count differs from num_users");
  }
  std::vector<char> is_bad(static_cast<std::size_t>(cfg.num_users), 0);
  for (const int u : compromised) {
    if (u < 0 || u >= cfg.num_users) throw InvalidArgument("fed_train: compromised user out of range");
    is_bad[static_cast<std::size_t>(u)] = 1;
  }

  // Local datasets, poisoned once up front for compromised users.
  std::vector<data::Dataset> local(static_cast<std::size_t>(cfg.num_users));
  for (std::size_t u = 0; u < local.size(); ++u) {
    if (data.shards[u].empty()) throw InvalidArgument("fed_train: user " + std::to_string(u) + " has an empty shard");
    data::Dataset shard = data.train->subset(data.shards[u]);
    if (is_bad[u]) {
      poison::PoisonSpec s = spec;
      s.fraction = cfg.user_poison_rate;
      s.seed = derive_seed(spec.seed, "user", {u});
      shard = poison::wrap_dataset(shard, s).materialize();
    }
    local[u] = std::move(shard);
  }

  FedRunResult result;
  result.params = nn::init_model(model, cfg.local.seed);
  std::vector<float>& global = result.params.values;
  const std::size_t n = global.size();
  const int total_epochs = cfg.rounds * cfg.local_epochs;
  nn::TrainConfig local_cfg = cfg.local;
  local_cfg.epochs = cfg.local_epochs;

  for (int q = 0; q < cfg.rounds; ++q) {
    Rng pick(derive_seed(cfg.seed, "round", {static_cast<std::uint64_t>(q)}));
    std::vector<int> users(static_cast<std::size_t>(cfg.num_users));
    for (int u = 0; u < cfg.num_users; ++u) users[static_cast<std::size_t>(u)] = u;
    for (std::size_t i = 0; i < static_cast<std::size_t>(cfg.round_size); ++i) {
      std::swap(users[i], users[i + pick.index(users.size() - i)]);
    }
    users.resize(static_cast<std::size_t>(cfg.round_size));
    std::sort(users.begin(), users.end());
    result.participation.push_back(users);

    std::vector<std::vector<float>> deltas(users.size());
    parallel_for(users.size(), workers, [&](std::size_t k) {
      const auto u = static_cast<std::size_t>(users[k]);
      nn::TrainConfig c = local_cfg;
      c.seed = cfg.local.seed + u;
      auto trained = nn::train_from(result.params, local[u], model, c,
                                    {q * cfg.local_epochs, total_epochs});
      std::vector<float>& d = trained.params.values;
      for (std::size_t i = 0; i < n; ++i) d[i] -= global[i];
      if (cfg.clip_bound) {
        const double norm = std::sqrt(simd::sum_sq(d));
        if (norm > *cfg.clip_bound) simd::scale(static_cast<float>(*cfg.clip_bound / norm), d);
      }
      deltas[k] = std::move(d);
    });

    std::vector<double> avg(n, 0.0);
    for (const auto& d : deltas) {
      for (std::size_t i = 0; i < n; ++i) avg[i] += d[i];
    }
    const double inv = 1.0 / static_cast<double>(deltas.size());
    Rng noise(derive_seed(cfg.seed, "server", {static_cast<std::uint64_t>(q)}));
    for (std::size_t i = 0; i < n; ++i) {
      double step = avg[i] * inv;
      if (cfg.noise_sigma > 0.0) step += cfg.noise_sigma * noise.normal();
      global[i] = static_cast<float>(global[i] + cfg.global_lr * step);
      if (!std::isfinite(global[i])) throw NumericError("federated round " + std::to_string(q) + " diverged");
    }
  }

  if (data.val != nullptr) {
    result.main_acc = nn::evaluate(result.params, model, *data.val).accuracy;
    result.backdoor_acc =
        nn::evaluate(result.params, model, poison::poison_eval_set(*data.val, spec)).accuracy;
  }
  return result;
}

resistance::PoisonCurve fed_resistance_curve(const FedConfig& cfg, const nn::ModelSpec& model,
                                             const FedData& data, const poison::PoisonSpec& spec,
                                             const std::vector<double>& fractions, int repeats,
                                             std::uint64_t master_seed, int workers) {
  validate(cfg);
  if (data.val == nullptr) throw InvalidArgument("fed_resistance_curve: needs a validation set");
  auto eval = std::make_shared<const data::Dataset>(poison::poison_eval_set(*data.val, spec));
  auto point = [&, eval](double f, std::uint64_t seed) {
    FedConfig c = cfg;
    c.seed = derive_seed(seed, "fed");
    c.local.seed = derive_seed(seed, "train");
    FedData d = data;
    d.val = nullptr;
    const auto run = fed_train(c, model, d, pick_compromised(cfg.num_users, f, seed), spec, 1);
    resistance::PointMetrics m;
    m.main_acc = nn::evaluate(run.params, model, *data.val).accuracy;
    m.backdoor_acc = nn::evaluate(run.params, model, *eval).accuracy;
    return m;
  };
  return resistance::build_curve(fractions, repeats, master_seed, point, workers);
}

}  // namespace natres::fed
