// Copyright 2026 The natres Authors
// SPDX-License-Identifier: Apache-2.0

#include "natres/search/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "natres/error.hpp"
#include "natres/rng.hpp"

namespace natres::search {

std::string to_string(PipelineStatus s) {
  switch (s) {
    case PipelineStatus::ok: return "ok";
    case PipelineStatus::not_measurable: return "not-measurable";
    case PipelineStatus::no_resistant_config: return "no-resistant-config";
  }
  return "ok";
}

double PipelineReport::main_base() const {
  return audit2_base.curve.points.empty() ? NAN : audit2_base.curve.points.front().main_acc;
}

double PipelineReport::main_resistant() const {
  return audit2_resistant.curve.points.empty() ? NAN : audit2_resistant.curve.points.front().main_acc;
}

double PipelineReport::resistance_ratio() const {
  if (!audit2_base.point.measured()) return NAN;
  return audit2_resistant.point.ordering_value() / audit2_base.point.p;
}

namespace {

struct Resolved {
  nn::ModelSpec model;
  nn::TrainConfig cfg;
};

Resolved resolve(const PipelineConfig& cfg, const HyperPoint& point) {
  Resolved r{cfg.model, cfg.base};
  apply_point(point, r.cfg, r.model);
  return r;
}

AuditResult audit(const PipelineConfig& cfg, const HyperPoint& point, const data::Dataset& train,
                  const data::Dataset& eval, const poison::PoisonSpec& spec, std::uint64_t master,
                  const std::string& key, TrialLog& log, int workers) {
  const Resolved r = resolve(cfg, point);
  resistance::CentralSetup setup{&train, &eval, spec, r.model, r.cfg};
  AuditResult out;
  out.curve = resistance::build_curve(cfg.grid, cfg.repeats, master,
                                      logged_point_fn(log, key, resistance::central_point_fn(setup)), workers);
  out.point = resistance::resistance_point(out.curve, {cfg.method, std::nullopt, std::nullopt});
  return out;
}

nn::ModelParams train_clean(const PipelineConfig& cfg, const HyperPoint& point, const data::Dataset& train,
                            std::uint64_t seed) {
  Resolved r = resolve(cfg, point);
  r.cfg.seed = seed;
  return nn::train(train, r.model, r.cfg).params;
}

Json class_json(const std::vector<nn::ClassAccuracy>& rows) {
  Json a = Json::array();
  for (const auto& c : rows) a.push_back({{"label", c.label}, {"count", c.count}, {"correct", c.correct}});
  return a;
}

std::vector<nn::ClassAccuracy> class_rows(const Json& a) {
  std::vector<nn::ClassAccuracy> rows;
  for (const auto& j : a) {
    rows.push_back({j.at("label").get<int>(), j.at("count").get<std::size_t>(), j.at("correct").get<std::size_t>()});
  }
  return rows;
}

std::vector<nn::ClassAccuracy> per_class(const PipelineConfig& cfg, const HyperPoint& point,
                                         const PipelineData& data, const std::string& key, TrialLog& log) {
  const Json rec = log.memo(key, [&] {
    const Resolved r = resolve(cfg, point);
    const auto params = train_clean(cfg, point, *data.train, derive_seed(cfg.seed, "per-class"));
    return Json{{"type", "per-class"}, {"classes", class_json(nn::evaluate(params, r.model, *data.test).per_class)}};
  });
  return class_rows(rec.at("classes"));
}

void validate(const PipelineConfig& cfg, const PipelineData& data) {
  if (data.train == nullptr || data.val == nullptr || data.test == nullptr) {
    throw InvalidArgument("pipeline: train, val and test splits are required");
  }
  if (!(cfg.k > 0.0)) throw InvalidArgument("pipeline: k must be > 0");
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) throw InvalidArgument("pipeline: alpha must lie in [0, 1]");
  if (cfg.grid.size() < 3) throw InvalidArgument("pipeline: the poisoning grid needs p = 0 and at least 2 rates");
  if (cfg.space.empty()) throw InvalidArgument("pipeline: empty Stage-2 search space");
  if (cfg.stage1_space.empty() && !cfg.stage1_point) throw InvalidArgument("pipeline: empty Stage-1 search space");
}

}  // namespace

PipelineReport run_pipeline(const PipelineConfig& cfg, const PipelineData& data, TrialLog& log, int workers) {
  validate(cfg, data);
  PipelineReport rep;
  rep.alpha = cfg.alpha;
  const data::Dataset& train = *data.train;

  poison::BackdoorParams bp = cfg.backdoor;
  bp.fraction = 0.0;
  poison::PoisonSpec spec = poison::make_backdoor(cfg.kind, train, bp, derive_seed(cfg.seed, "trigger"));

  // Stage 1: clean data, main accuracy only.
  const data::Dataset val_eval = poison::poison_eval_set(*data.val, spec);
  StageConfig s1;
  s1.name = "stage1";
  s1.trials = cfg.stage1_trials;
  s1.asha = cfg.asha;
  s1.reduction = cfg.asha_reduction;
  s1.min_epochs = cfg.asha_min_epochs;
  s1.max_epochs = cfg.base.epochs;
  s1.alpha = 1.0;
  s1.seed = derive_seed(cfg.seed, "stage1");
  if (cfg.stage1_point) {
    rep.lambda = *cfg.stage1_point;
  } else {
    TrialContext ctx1{&train, data.val, &val_eval, cfg.model, cfg.base};
    rep.stage1 = run_stage(cfg.stage1_space, ctx1, s1, log, workers);
    rep.lambda = best_by_joint_score(rep.stage1.trials, 1.0).point;
  }

  // A clean model under lambda vets the trigger before any curve is built.
  const nn::ModelParams clean = train_clean(cfg, rep.lambda, train, derive_seed(cfg.seed, "sanity"));
  const Resolved base = resolve(cfg, rep.lambda);
  rep.sanity = poison::check_trigger_sanity(clean, base.model, spec, *data.val);
  spec = rep.sanity.spec;

  // Audit 1 on the validation split.
  rep.audit1 = audit(cfg, rep.lambda, train, *data.val, spec, derive_seed(cfg.seed, "audit1"), "audit1/primary",
                     log, workers);
  if (!rep.audit1.point.measured()) {
    rep.status = PipelineStatus::not_measurable;
    rep.message = "Audit 1 found no measurable resistance point (status " + to_string(rep.audit1.point.status) +
                  "); raise the largest poisoning rate of the grid";
    return rep;
  }
  if (cfg.audit_only) return rep;

  // Stage 2: poisoned at p*, both objectives.
  rep.p_star = std::min(1.0, cfg.k * rep.audit1.point.p);
  poison::PoisonSpec s2spec = spec;
  s2spec.fraction = rep.p_star;
  s2spec.seed = derive_seed(cfg.seed, "stage2-poison");
  const data::Dataset poisoned = poison::wrap_dataset(train, s2spec).materialize();
  StageConfig s2 = s1;
  s2.name = "stage2";
  s2.trials = cfg.stage2_trials;
  s2.alpha = cfg.alpha;
  s2.seed = derive_seed(cfg.seed, "stage2");
  TrialContext ctx2{&poisoned, data.val, &val_eval, cfg.model, cfg.base};
  rep.stage2 = run_stage(cfg.space, ctx2, s2, log, workers);
  rep.frontier = pareto_frontier(rep.stage2.trials);
  if (cfg.select_trial) {
    const int id = *cfg.select_trial;
    if (id < 0 || id >= static_cast<int>(rep.stage2.trials.size()) ||
        rep.stage2.trials[static_cast<std::size_t>(id)].status != TrialStatus::complete) {
      throw InvalidArgument("--select " + std::to_string(id) + ": no complete Stage-2 trial with that id");
    }
    rep.selected_trial = id;
  } else {
    rep.selected_trial = best_by_joint_score(rep.stage2.trials, cfg.alpha).trial_id;
  }
  rep.lambda_r = rep.stage2.trials[static_cast<std::size_t>(rep.selected_trial)].point;

  // Audit 2 on the test split, same repeat seeds for both configurations.
  const std::uint64_t a2 = derive_seed(cfg.seed, "audit2");
  rep.audit2_base = audit(cfg, rep.lambda, train, *data.test, spec, a2, "audit2/base/primary", log, workers);
  rep.audit2_resistant =
      audit(cfg, rep.lambda_r, train, *data.test, spec, a2, "audit2/trial/" + std::to_string(rep.selected_trial) + "/primary",
            log, workers);

  for (const auto& v : cfg.variants) {
    VariantResult vr;
    vr.spec = v;
    try {
      const auto vspec = poison::make_backdoor(v.kind, train, {v.coverage, bp.target_label, 0.0},
                                               derive_seed(cfg.seed, "variant", {hash_tag(v.name)}));
      const auto sane = poison::check_trigger_sanity(clean, base.model, vspec, *data.val);
      vr.sanity_attempts = sane.attempts;
      vr.base = audit(cfg, rep.lambda, train, *data.test, sane.spec, a2, "audit2/base/" + v.name, log, workers);
      vr.resistant = audit(cfg, rep.lambda_r, train, *data.test, sane.spec, a2,
                           "audit2/trial/" + std::to_string(rep.selected_trial) + "/" + v.name, log, workers);
    } catch (const poison::SanityError& e) {
      vr.sanity_attempts = poison::kMaxSanityAttempts;
      vr.error = e.what();
    }
    rep.variants.push_back(std::move(vr));
  }

  rep.per_class.base = per_class(cfg, rep.lambda, data, "per-class/base", log);
  rep.per_class.resistant =
      per_class(cfg, rep.lambda_r, data, "per-class/trial/" + std::to_string(rep.selected_trial), log);

  if (cfg.importance) {
    const auto complete = std::count_if(rep.stage2.trials.begin(), rep.stage2.trials.end(),
                                        [](const TrialResult& t) { return t.status == TrialStatus::complete; });
    if (complete >= 20) rep.importance_table = importance(rep.stage2.trials, cfg.space);
  }

  if (!rep.audit2_base.point.measured()) {
    rep.status = PipelineStatus::not_measurable;
    rep.message = "Audit 2 under the base configuration has no measurable resistance point";
  } else if (rep.audit2_resistant.point.ordering_value() >= rep.audit2_base.point.ordering_value()) {
    rep.status = PipelineStatus::ok;
  } else {
    rep.status = PipelineStatus::no_resistant_config;
    rep.message = "no resistant configuration found: the selected trial lowers the resistance point";
  }
  return rep;
}

}  // namespace natres::search
