// Copyright 2026 The natres Authors
// SPDX-License-Identifier: Apache-2.0

#include "natres/search/runner.hpp"

#include "natres/error.hpp"
#include "natres/parallel.hpp"
#include "natres/rng.hpp"

namespace natres::search {

TrialResult run_trial(const HyperPoint& point, const TrialContext& ctx, int epochs, std::uint64_t seed,
                      int trial_id) {
  if (ctx.train == nullptr || ctx.val == nullptr) throw InvalidArgument("run_trial: train and val sets are required");
  nn::TrainConfig cfg = ctx.base;
  nn::ModelSpec model = ctx.model;
  apply_point(point, cfg, model);
  cfg.epochs = epochs;
  cfg.seed = seed;

  TrialResult r;
  r.trial_id = trial_id;
  r.point = point;
  r.seed = seed;
  r.resource = epochs;
  try {
    const auto params = nn::train(*ctx.train, model, cfg).params;
    r.main_acc = nn::evaluate(params, model, *ctx.val).accuracy;
    if (ctx.val_poisoned != nullptr) r.backdoor_acc = nn::evaluate(params, model, *ctx.val_poisoned).accuracy;
    r.status = TrialStatus::complete;
  } catch (const NumericError& e) {
    r.status = TrialStatus::failed;
    r.error = e.what();
  }
  return r;
}

std::uint64_t trial_seed(std::uint64_t stage_seed, int trial_id) {
  return derive_seed(stage_seed, "train", {static_cast<std::uint64_t>(trial_id)});
}

HyperPoint trial_point(const SearchSpace& space, const StageConfig& stage, int trial_id) {
  if (trial_id == 0 && stage.seed_point) return *stage.seed_point;
  return sample_point(space, derive_seed(stage.seed, "point", {static_cast<std::uint64_t>(trial_id)}));
}

StageResult run_stage(const SearchSpace& space, const TrialContext& ctx, const StageConfig& stage,
                      TrialLog& log, int workers) {
  if (stage.trials < 1) throw InvalidArgument("stage '" + stage.name + "': trials must be >= 1");
  if (stage.max_epochs < 1) throw InvalidArgument("stage '" + stage.name + "': max_epochs must be >= 1");
  StageResult out;
  out.rung_epochs = stage.asha ? asha_rungs(stage.min_epochs, stage.max_epochs, stage.reduction)
                               : std::vector<int>{stage.max_epochs};
  out.trials.resize(static_cast<std::size_t>(stage.trials));
  std::vector<HyperPoint> points;
  for (int id = 0; id < stage.trials; ++id) points.push_back(trial_point(space, stage, id));

  std::vector<int> members(static_cast<std::size_t>(stage.trials));
  for (int id = 0; id < stage.trials; ++id) members[static_cast<std::size_t>(id)] = id;

  for (std::size_t k = 0; k < out.rung_epochs.size(); ++k) {
    const int epochs = out.rung_epochs[k];
    std::vector<TrialResult> rung(members.size());
    parallel_for(members.size(), workers, [&](std::size_t j) {
      const int id = members[j];
      const std::string key = stage.name + "/trial/" + std::to_string(id) + "/rung/" + std::to_string(k);
      if (auto rec = log.find(key)) {
        rung[j] = trial_from_json(*rec);
        return;
      }
      rung[j] = run_trial(points[static_cast<std::size_t>(id)], ctx, epochs, trial_seed(stage.seed, id), id);
      log.put(key, to_json(rung[j]));
    });
    out.rung_members.push_back(members);
    const bool last = k + 1 == out.rung_epochs.size();
    for (const auto& r : rung) {
      out.epochs_consumed += r.resource;
      TrialResult final = r;
      if (!last && final.status == TrialStatus::complete) final.status = TrialStatus::stopped_early;
      out.trials[static_cast<std::size_t>(r.trial_id)] = std::move(final);
    }
    if (last) break;
    const auto promoted = asha_select(rung, stage.reduction, stage.alpha);
    std::vector<int> next;
    for (const std::size_t j : promoted) {
      if (rung[j].status != TrialStatus::failed) next.push_back(rung[j].trial_id);
    }
    if (next.empty()) break;
    std::sort(next.begin(), next.end());
    members = std::move(next);
  }
  return out;
}

}  // namespace natres::search
