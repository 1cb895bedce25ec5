// Copyright 2026 The natres Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "natres/data/dataset.hpp"
#include "natres/nn/model.hpp"
#include "natres/nn/train.hpp"
#include "natres/poison/poison.hpp"
#include "natres/resistance/resistance.hpp"

namespace natres::fed {

struct FedConfig {
  int num_users = 100;
  int rounds = 20;
  int round_size = 10;    // users per round (M)
  int local_epochs = 1;   // l
  double global_lr = 1.0; // eta
  std::optional<double> clip_bound;  // per-user update norm cap
  double noise_sigma = 0.0;          // server Gaussian noise on the averaged update
  double user_poison_rate = 1.0;     // share of a compromised user's shard that is poisoned
  nn::TrainConfig local;             // local optimizer; local.seed also seeds the global init
  std::uint64_t seed = 0;            // user sampling and server noise
};

void validate(const FedConfig& cfg);

struct FedRunResult {
  nn::ModelParams params;
  std::vector<std::vector<int>> participation;  // users per round, ascending
  double main_acc = 0.0;
  double backdoor_acc = 0.0;
};

struct FedData {
  const data::Dataset* train = nullptr;
  std::vector<std::vector<std::size_t>> shards;  // from shard_users
  const data::Dataset* val = nullptr;            // clean evaluation set
};

// FedAvg. Round q samples M users without replacement; user u trains the
// global model for l epochs (epoch window q*l of rounds*l, seed local.seed + u);
// updates are clipped, averaged, noised, and applied with global_lr.
// Compromised users poison their shard with `spec`.
FedRunResult fed_train(const FedConfig& cfg, const nn::ModelSpec& model, const FedData& data,
                       const std::vector<int>& compromised, const poison::PoisonSpec& spec,
                       int workers = 1);

// Compromised users for fraction f: floor(f * num_users) of them, nested
// across f for a fixed seed.
std::vector<int> pick_compromised(int num_users, double fraction, std::uint64_t seed);

// Poisoning curve with the x axis in fraction of compromised users.
resistance::PoisonCurve fed_resistance_curve(const FedConfig& cfg, const nn::ModelSpec& model,
                                             const FedData& data, const poison::PoisonSpec& spec,
                                             const std::vector<double>& fractions, int repeats,
                                             std::uint64_t master_seed, int workers = 1);

}  // namespace natres::fed
