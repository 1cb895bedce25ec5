// Copyright 2026 The natres Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "natres/data/dataset.hpp"
#include "natres/nn/model.hpp"
#include "natres/nn/train.hpp"
#include "natres/poison/poison.hpp"

namespace natres::resistance {

// Geometric grid p_min .. p_max with n points, preceded by 0.
std::vector<double> exp_grid(double p_min, double p_max, int n);

struct CurvePoint {
  double p = 0.0;
  double backdoor_acc = 0.0;  // median over successful repeats
  double main_acc = 0.0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> backdoor_repeats;
  std::vector<double> main_repeats;
  bool failed = false;  // every repeat failed to train
};

struct PoisonCurve {
  std::vector<CurvePoint> points;
};

struct PointMetrics {
  double backdoor_acc = 0.0;
  double main_acc = 0.0;
};

// Trains and evaluates one model at poisoning level p.
using PointFn = std::function<PointMetrics(double p, std::uint64_t seed)>;

// Repeat r of every point uses the seed derive_seed(master_seed, "repeat", {r}),
// so points differ only in p (poisoned index sets are nested across p). A
// NumericError marks the repeat failed; other exceptions propagate.
PoisonCurve build_curve(const std::vector<double>& grid, int repeats, std::uint64_t master_seed,
                        const PointFn& point, int workers = 1);

// Centralized training: poison `train` at p with `spec`, train with cfg, report
// accuracy on clean `val` and on the poisoned evaluation set built from `val`.
struct CentralSetup {
  const data::Dataset* train = nullptr;
  const data::Dataset* val = nullptr;
  poison::PoisonSpec spec;
  nn::ModelSpec model;
  nn::TrainConfig cfg;
};

PointFn central_point_fn(const CentralSetup& setup);

double median(std::vector<double> values);

enum class Method { midpoint, inflection };
enum class Status { ok, not_reached, not_measurable };

std::string to_string(Method m);
std::string to_string(Status s);

struct ResistancePoint {
  double p = 0.0;  // p-max probed when not reached or not measurable
  Method method = Method::midpoint;
  Status status = Status::ok;
  double a_min = 0.0;
  double a_max = 0.0;
  double threshold = 0.0;

  bool measured() const { return status == Status::ok; }
  // Orders curves: unmeasured resistance sits beyond every probed p.
  double ordering_value() const;
};

inline constexpr double kMinMeasurableSpan = 0.05;

struct ResistanceOptions {
  Method method = Method::midpoint;
  // Replace the curve's own extremes in the threshold, e.g. to ask where a
  // second curve reaches the first curve's midpoint.
  std::optional<double> reference_min;
  std::optional<double> reference_max;
};

ResistancePoint resistance_point(const PoisonCurve& curve, const ResistanceOptions& options = {});

// Columns p, backdoor_acc, main_acc, repeat_seeds (seeds joined by ';').
void write_curve_csv(std::ostream& out, const PoisonCurve& curve);
void write_curve_csv(const std::filesystem::path& path, const PoisonCurve& curve);
PoisonCurve read_curve_csv(const std::filesystem::path& path);

}  // namespace natres::resistance
