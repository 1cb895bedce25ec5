// Copyright 2026 The natres Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "natres/data/dataset.hpp"
#include "natres/error.hpp"
#include "natres/nn/model.hpp"

namespace natres::poison {

// Contiguous window over the flattened input plus the values written into it.
struct Trigger {
  std::size_t mask_start = 0;
  std::size_t mask_len = 0;
  std::vector<float> pattern;
  double coverage = 0.0;
  std::uint64_t seed = 0;
};

// mask_len = round(s * len). Window start and pattern are uniform draws; the
// pattern holds integers when the dataset does.
Trigger create_patch(const data::Dataset& dataset, double coverage, std::uint64_t seed);

// floor(p * n) distinct indices in ascending order.
std::vector<std::size_t> sample_indices(std::size_t n, double p, std::uint64_t seed);

// Writes the pattern into the window of x.
void apply_pattern(std::span<float> x, const Trigger& trigger);
std::vector<float> apply_pattern(std::span<const float> x, const Trigger& trigger);

enum class Kind { primitive, single_pixel, clean_label, composite_dynamic, mixed_labels };

std::string to_string(Kind k);
Kind parse_kind(const std::string& s);

struct PoisonSpec {
  Kind kind = Kind::primitive;
  Trigger trigger;
  int target_label = 0;  // unused by mixed-labels
  double fraction = 0.0;
  std::uint64_t seed = 0;
  double epsilon = 0.0;  // clean-label blend bound in value units
  std::string note;      // set when a kind had to fall back (e.g. no spatial dims)

  // Backdoor label for a sample whose true label is y.
  int label_for(int y, int num_classes) const;
};

// Throws InvalidArgument when the spec cannot apply to the dataset.
void validate(const PoisonSpec& spec, const data::Dataset& dataset);

struct BackdoorParams {
  double coverage = 0.05;
  int target_label = 0;
  double fraction = 0.0;
};

PoisonSpec make_backdoor(Kind kind, const data::Dataset& dataset, const BackdoorParams& params,
                         std::uint64_t seed);

// Same kind and coverage, fresh window and pattern from seed + 1.
PoisonSpec regenerate(const PoisonSpec& spec, const data::Dataset& dataset);

// Read-only poisoned overlay of a base dataset. The base must outlive the view.
class PoisonedView {
 public:
  PoisonedView(const data::Dataset& base, PoisonSpec spec);

  std::size_t size() const { return base_->size(); }
  const data::Dataset& base() const { return *base_; }
  const PoisonSpec& spec() const { return spec_; }
  const std::vector<std::size_t>& poisoned_indices() const { return indices_; }
  bool is_poisoned(std::size_t i) const { return flags_[i] != 0; }

  // Writes row i into out (input_len values) and returns its label.
  int get(std::size_t i, std::span<float> out) const;

  data::Dataset materialize() const;

 private:
  const data::Dataset* base_;
  PoisonSpec spec_;
  std::vector<std::size_t> indices_;
  std::vector<char> flags_;
};

inline PoisonedView wrap_dataset(const data::Dataset& base, PoisonSpec spec) {
  return PoisonedView(base, std::move(spec));
}

// Every sample whose backdoor label differs from its true label, triggered
// with the full pattern and relabelled. Throws InvalidArgument if none remain.
data::Dataset poison_eval_set(const data::Dataset& dataset, const PoisonSpec& spec);

class SanityError : public Error {
 public:
  using Error::Error;
};

struct SanityResult {
  PoisonSpec spec;
  int attempts = 0;
  std::vector<double> backdoor_accuracy;  // one per attempt
  bool regenerated() const { return attempts > 1; }
};

inline constexpr int kMaxSanityAttempts = 10;

inline double sanity_threshold(int num_classes) { return 2.0 / num_classes; }

// Backdoor accuracy of a clean model must stay at or below 2 / C. Otherwise
// the trigger is regenerated from seed + 1, at most 10 attempts in total.
SanityResult check_trigger_sanity(const nn::ModelParams& clean_model, const nn::ModelSpec& model,
                                  PoisonSpec spec, const data::Dataset& eval_pool);

}  // namespace natres::poison
