// Copyright 2026 The natres Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "natres/data/dataset.hpp"
#include "natres/nn/model.hpp"
#include "natres/nn/train.hpp"
#include "natres/search/trial_log.hpp"
#include "natres/search/trials.hpp"

namespace natres::search {

// Shared, immutable inputs of every trial in a stage.
struct TrialContext {
  const data::Dataset* train = nullptr;         // poisoned at p* in Stage 2
  const data::Dataset* val = nullptr;           // clean
  const data::Dataset* val_poisoned = nullptr;  // optional; backdoor accuracy is 0 without it
  nn::ModelSpec model;
  nn::TrainConfig base;  // fields the point leaves unset
};

// Trains base + point for `epochs` (point-supplied epochs are overridden) and
// evaluates. A NumericError during training yields status failed.
TrialResult run_trial(const HyperPoint& point, const TrialContext& ctx, int epochs, std::uint64_t seed,
                      int trial_id = 0);

struct StageConfig {
  std::string name = "stage";
  int trials = 24;
  bool asha = false;
  int reduction = 3;
  int min_epochs = 1;
  int max_epochs = 10;
  double alpha = 1.0;  // ranking objective; 1 = main accuracy only
  std::uint64_t seed = 0;
  // Trial 0 evaluates this point instead of a sample (e.g. a known baseline).
  std::optional<HyperPoint> seed_point;
};

struct StageResult {
  std::vector<TrialResult> trials;  // final state per trial, ordered by id
  std::vector<int> rung_epochs;
  std::vector<std::vector<int>> rung_members;  // trial ids evaluated per rung
  std::int64_t epochs_consumed = 0;
};

std::uint64_t trial_seed(std::uint64_t stage_seed, int trial_id);
HyperPoint trial_point(const SearchSpace& space, const StageConfig& stage, int trial_id);

// Seeded random search over the space; with asha, synchronous successive
// halving where every rung retrains its members from scratch at the rung's
// epoch budget. Trials of a rung run on `workers` threads; every result is
// keyed in the log as "<name>/trial/<id>/rung/<k>" and replayed if present.
StageResult run_stage(const SearchSpace& space, const TrialContext& ctx, const StageConfig& stage,
                      TrialLog& log, int workers = 1);

}  // namespace natres::search
