// Copyright 2026 The natres Authors
// SPDX-License-Identifier: Apache-2.0

#include "natres/poison/poison.hpp"

#include <algorithm>
#include <cmath>

#include "natres/nn/train.hpp"
#include "natres/rng.hpp"

namespace natres::poison {

namespace {

float draw_value(Rng& rng, const data::Dataset& d) {
  if (d.dtype() == data::DType::integer) {
    return static_cast<float>(rng.uniform_int(static_cast<std::int64_t>(d.x_min()),
                                              static_cast<std::int64_t>(d.x_max())));
  }
  return static_cast<float>(rng.uniform(d.x_min(), d.x_max()));
}

std::vector<std::size_t> sample_count(std::size_t n, std::size_t k, std::uint64_t seed) {
  // Partial Fisher-Yates over an identity permutation.
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(derive_seed(seed, "sample"));
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.index(n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

// Per-sample placement for composite-dynamic: integer scale 1 or 2 applied by
// nearest-neighbour repetition, random start.
Trigger dynamic_trigger(const PoisonSpec& spec, std::size_t len, std::size_t sample) {
  Rng rng(derive_seed(spec.seed, "dynamic", {sample}));
  const std::size_t base = spec.trigger.mask_len;
  const auto scale = static_cast<std::size_t>(rng.uniform_int(1, 2));
  const std::size_t scaled = std::min(len, base * scale);
  Trigger t;
  t.mask_len = scaled;
  t.mask_start = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(len - scaled)));
  t.pattern.resize(scaled);
  for (std::size_t j = 0; j < scaled; ++j) t.pattern[j] = spec.trigger.pattern[j * base / scaled];
  t.coverage = spec.trigger.coverage;
  t.seed = spec.trigger.seed;
  return t;
}

void blend(std::span<float> x, const Trigger& t, double epsilon, const data::Dataset& d) {
  const bool integer = d.dtype() == data::DType::integer;
  const double eps = integer ? std::floor(epsilon) : epsilon;
  for (std::size_t j = 0; j < t.mask_len; ++j) {
    float& v = x[t.mask_start + j];
    const double delta = std::clamp(static_cast<double>(t.pattern[j]) - v, -eps, eps);
    v = static_cast<float>(std::clamp(v + delta, static_cast<double>(d.x_min()),
                                      static_cast<double>(d.x_max())));
  }
}

// Training-side trigger for row `sample` (base index).
void poison_row(std::span<float> x, const PoisonSpec& spec, const data::Dataset& d,
                std::size_t sample) {
  switch (spec.kind) {
    case Kind::clean_label: blend(x, spec.trigger, spec.epsilon, d); return;
    case Kind::composite_dynamic: apply_pattern(x, dynamic_trigger(spec, x.size(), sample)); return;
    default: apply_pattern(x, spec.trigger); return;
  }
}

}  // namespace

Trigger create_patch(const data::Dataset& dataset, double coverage, std::uint64_t seed) {
  if (!(coverage > 0.0 && coverage < 1.0)) throw InvalidArgument("create_patch: coverage must be in (0, 1)");
  const std::size_t len = dataset.input_len();
  const auto mask_len = static_cast<std::size_t>(std::llround(coverage * static_cast<double>(len)));
  if (mask_len < 1) {
    throw InvalidArgument("create_patch: coverage " + std::to_string(coverage) +
                          " rounds to an empty window for input length " + std::to_string(len));
  }
  Rng rng(seed);
  Trigger t;
  t.mask_len = mask_len;
  t.mask_start = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(len - mask_len)));
  t.pattern.resize(mask_len);
  for (float& v : t.pattern) v = draw_value(rng, dataset);
  t.coverage = coverage;
  t.seed = seed;
  return t;
}

std::vector<std::size_t> sample_indices(std::size_t n, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("sample_indices: p must be in [0, 1]");
  const auto k = static_cast<std::size_t>(std::floor(p * static_cast<double>(n)));
  return sample_count(n, std::min(k, n), seed);
}

void apply_pattern(std::span<float> x, const Trigger& trigger) {
  if (trigger.pattern.size() != trigger.mask_len || trigger.mask_start + trigger.mask_len > x.size()) {
    throw InvalidArgument("apply_pattern: trigger window does not fit input of length " +
                          std::to_string(x.size()));
  }
  std::copy(trigger.pattern.begin(), trigger.pattern.end(),
            x.begin() + static_cast<std::ptrdiff_t>(trigger.mask_start));
}

std::vector<float> apply_pattern(std::span<const float> x, const Trigger& trigger) {
  std::vector<float> out(x.begin(), x.end());
  apply_pattern(std::span<float>(out), trigger);
  return out;
}

std::string to_string(Kind k) {
  switch (k) {
    case Kind::primitive: return "primitive";
    case Kind::single_pixel: return "single-pixel";
    case Kind::clean_label: return "clean-label";
    case Kind::composite_dynamic: return "composite-dynamic";
    case Kind::mixed_labels: return "mixed-labels";
  }
  return "primitive";
}

Kind parse_kind(const std::string& s) {
  for (const Kind k : {Kind::primitive, Kind::single_pixel, Kind::clean_label,
                       Kind::composite_dynamic, Kind::mixed_labels}) {
    if (s == to_string(k)) return k;
  }
  throw InvalidArgument("unknown backdoor kind '" + s + "'");
}

int PoisonSpec::label_for(int y, int num_classes) const {
  if (kind == Kind::mixed_labels) return y < (num_classes + 1) / 2 ? 0 : 1;
  return target_label;
}

void validate(const PoisonSpec& spec, const data::Dataset& dataset) {
  if (!(spec.fraction >= 0.0 && spec.fraction <= 1.0)) {
    throw InvalidArgument("poison fraction must be in [0, 1]");
  }
  if (spec.kind != Kind::mixed_labels &&
      (spec.target_label < 0 || spec.target_label >= dataset.num_classes())) {
    throw InvalidArgument("backdoor label " + std::to_string(spec.target_label) +
                          " outside [0, " + std::to_string(dataset.num_classes()) + ")");
  }
  if (!(spec.epsilon >= 0.0)) throw InvalidArgument("clean-label epsilon must be >= 0");
  const Trigger& t = spec.trigger;
  if (t.mask_len == 0 || t.pattern.size() != t.mask_len ||
      t.mask_start + t.mask_len > dataset.input_len()) {
    throw InvalidArgument("trigger window does not fit input length " +
                          std::to_string(dataset.input_len()));
  }
  for (const float v : t.pattern) {
    if (!(v >= dataset.x_min() && v <= dataset.x_max())) {
      throw InvalidArgument("trigger pattern value outside the dataset range");
    }
    if (dataset.dtype() == data::DType::integer && v != std::round(v)) {
      throw InvalidArgument("trigger pattern must hold integers for integer data");
    }
  }
}

PoisonSpec make_backdoor(Kind kind, const data::Dataset& dataset, const BackdoorParams& params,
                         std::uint64_t seed) {
  PoisonSpec spec;
  spec.kind = kind;
  spec.target_label = params.target_label;
  spec.fraction = params.fraction;
  spec.seed = seed;
  const std::uint64_t trigger_seed = derive_seed(seed, "trigger");
  if (kind == Kind::single_pixel) {
    Trigger& t = spec.trigger;
    const auto& dims = dataset.dims();
    if (dims.size() == 3) {
      // Row 0, last column, every channel.
      const auto w = static_cast<std::size_t>(dims[1]);
      const auto c = static_cast<std::size_t>(dims[2]);
      t.mask_start = (w - 1) * c;
      t.mask_len = c;
    } else {
      t.mask_start = dataset.input_len() - 1;
      t.mask_len = 1;
      spec.note = "no spatial dims; single pixel placed at the last input index";
    }
    t.pattern.assign(t.mask_len, dataset.x_max());
    t.coverage = static_cast<double>(t.mask_len) / static_cast<double>(dataset.input_len());
    t.seed = trigger_seed;
  } else {
    spec.trigger = create_patch(dataset, params.coverage, trigger_seed);
  }
  if (kind == Kind::clean_label) {
    spec.epsilon = 32.0 / 255.0 * (static_cast<double>(dataset.x_max()) - dataset.x_min());
  }
  validate(spec, dataset);
  return spec;
}

PoisonSpec regenerate(const PoisonSpec& spec, const data::Dataset& dataset) {
  BackdoorParams params;
  params.coverage = spec.trigger.coverage;
  params.target_label = spec.target_label;
  params.fraction = spec.fraction;
  PoisonSpec next = make_backdoor(spec.kind, dataset, params, spec.seed + 1);
  if (spec.kind == Kind::clean_label) next.epsilon = spec.epsilon;
  return next;
}

PoisonedView::PoisonedView(const data::Dataset& base, PoisonSpec spec)
    : base_(&base), spec_(std::move(spec)), flags_(base.size(), 0) {
  validate(spec_, base);
  const std::size_t n = base.size();
  const auto k = static_cast<std::size_t>(std::floor(spec_.fraction * static_cast<double>(n)));
  if (spec_.kind == Kind::clean_label) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < n; ++i) {
      if (base.label(i) == spec_.target_label) candidates.push_back(i);
    }
    const auto chosen = sample_count(candidates.size(), std::min(k, candidates.size()), spec_.seed);
    for (const std::size_t c : chosen) indices_.push_back(candidates[c]);
  } else {
    indices_ = sample_count(n, k, spec_.seed);
  }
  for (const std::size_t i : indices_) flags_[i] = 1;
}

int PoisonedView::get(std::size_t i, std::span<float> out) const {
  if (i >= size()) throw InvalidArgument("PoisonedView::get: index out of range");
  const auto row = base_->row(i);
  if (out.size() != row.size()) throw InvalidArgument("PoisonedView::get: output length mismatch");
  std::copy(row.begin(), row.end(), out.begin());
  const int y = base_->label(i);
  if (!flags_[i]) return y;
  poison_row(out, spec_, *base_, i);
  return spec_.label_for(y, base_->num_classes());
}

data::Dataset PoisonedView::materialize() const {
  const std::size_t len = base_->input_len();
  std::vector<float> x(base_->inputs().begin(), base_->inputs().end());
  std::vector<int> y(base_->labels().begin(), base_->labels().end());
  for (const std::size_t i : indices_) {
    poison_row(std::span<float>(x.data() + i * len, len), spec_, *base_, i);
    y[i] = spec_.label_for(y[i], base_->num_classes());
  }
  return data::Dataset::create_with_range(len, std::move(x), std::move(y), base_->num_classes(),
                                          base_->x_min(), base_->x_max(), base_->dtype(),
                                          base_->dims(), base_->class_names());
}

data::Dataset poison_eval_set(const data::Dataset& dataset, const PoisonSpec& spec) {
  validate(spec, dataset);
  const std::size_t len = dataset.input_len();
  const int c = dataset.num_classes();
  std::vector<float> x;
  std::vector<int> y;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const int target = spec.label_for(dataset.label(i), c);
    if (target == dataset.label(i)) continue;
    const auto row = dataset.row(i);
    const std::size_t at = x.size();
    x.insert(x.end(), row.begin(), row.end());
    const std::span<float> dst(x.data() + at, len);
    // Clean-label stealth only limits training; evaluation uses the full pattern.
    if (spec.kind == Kind::composite_dynamic) {
      apply_pattern(dst, dynamic_trigger(spec, len, i));
    } else {
      apply_pattern(dst, spec.trigger);
    }
    y.push_back(target);
  }
  if (y.empty()) throw InvalidArgument("poison_eval_set: every sample already carries its backdoor label");
  return data::Dataset::create_with_range(len, std::move(x), std::move(y), c, dataset.x_min(),
                                          dataset.x_max(), dataset.dtype(), dataset.dims(),
                                          dataset.class_names());
}

SanityResult check_trigger_sanity(const nn::ModelParams& clean_model, const nn::ModelSpec& model,
                                  PoisonSpec spec, const data::Dataset& eval_pool) {
  const double tau = sanity_threshold(eval_pool.num_classes());
  SanityResult result;
  for (int attempt = 1; attempt <= kMaxSanityAttempts; ++attempt) {
    if (attempt > 1) spec = regenerate(spec, eval_pool);
    const double acc = nn::evaluate(clean_model, model, poison_eval_set(eval_pool, spec)).accuracy;
    result.backdoor_accuracy.push_back(acc);
    result.attempts = attempt;
    if (acc <= tau) {
      result.spec = std::move(spec);
      return result;
    }
  }
  throw SanityError("trigger sanity check failed " + std::to_string(kMaxSanityAttempts) +
                    " times: the clean model already maps triggered inputs to the backdoor label "
                    "(the dataset likely contains a natural backdoor)");
}

}  // namespace natres::poison
