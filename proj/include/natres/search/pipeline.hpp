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
#include "natres/poison/poison.hpp"
#include "natres/resistance/resistance.hpp"
#include "natres/search/runner.hpp"
#include "natres/search/trial_log.hpp"

namespace natres::search {

// A backdoor audited under both configurations after the search.
struct VariantSpec {
  std::string name;
  poison::Kind kind = poison::Kind::primitive;
  double coverage = 0.05;
};

struct PipelineConfig {
  SearchSpace stage1_space = generic_space();
  SearchSpace space = default_space();  // Stage 2
  nn::ModelSpec model;
  nn::TrainConfig base;  // defaults under every point; base.epochs is the trial budget
  poison::Kind kind = poison::Kind::primitive;
  poison::BackdoorParams backdoor;  // fraction is ignored
  std::vector<VariantSpec> variants;

  int stage1_trials = 24;
  int stage2_trials = 60;
  bool asha = false;
  int asha_reduction = 3;
  int asha_min_epochs = 1;
  std::optional<HyperPoint> stage1_point;  // skip Stage 1 and use this lambda

  double k = 2.0;
  double alpha = 1.0;  // resolved joint-objective weight for Stage 2
  std::optional<int> select_trial;  // explicit Stage-2 pick instead of argmax

  std::vector<double> grid;
  int repeats = 1;
  resistance::Method method = resistance::Method::midpoint;
  bool importance = true;
  bool audit_only = false;  // stop after Audit 1
  std::uint64_t seed = 0;
};

struct PipelineData {
  const data::Dataset* train = nullptr;
  const data::Dataset* val = nullptr;
  const data::Dataset* test = nullptr;
};

enum class PipelineStatus { ok, not_measurable, no_resistant_config };

std::string to_string(PipelineStatus s);

struct AuditResult {
  resistance::PoisonCurve curve;
  resistance::ResistancePoint point;
};

struct VariantResult {
  VariantSpec spec;
  int sanity_attempts = 0;
  std::string error;      // set when no trigger passed the sanity check
  AuditResult base;       // under lambda
  AuditResult resistant;  // under lambda_R
};

struct ClassTable {
  std::vector<nn::ClassAccuracy> base;
  std::vector<nn::ClassAccuracy> resistant;
};

struct PipelineReport {
  PipelineStatus status = PipelineStatus::ok;
  std::string message;

  StageResult stage1;
  HyperPoint lambda;
  poison::SanityResult sanity;
  AuditResult audit1;

  double p_star = 0.0;
  double alpha = 1.0;
  StageResult stage2;
  std::vector<TrialResult> frontier;
  int selected_trial = -1;
  HyperPoint lambda_r;

  AuditResult audit2_base;
  AuditResult audit2_resistant;
  std::vector<VariantResult> variants;
  ClassTable per_class;
  std::vector<ParamImportance> importance_table;

  // Clean-test main accuracy (p = 0 median) and the resistance-point ratio.
  double main_base() const;
  double main_resistant() const;
  double resistance_ratio() const;
};

// Stage 1 on clean data (maximize main accuracy) -> lambda; Audit 1 on the
// validation split; Stage 2 on training data poisoned at p* = min(1, k p°)
// ranked by the joint objective -> frontier and lambda_R; Audit 2 of both
// configurations on the test split, plus variant backdoors. Every training
// goes through `log`, so a rerun with the same log replays instead of
// retraining.
PipelineReport run_pipeline(const PipelineConfig& cfg, const PipelineData& data, TrialLog& log,
                            int workers = 1);

}  // namespace natres::search
