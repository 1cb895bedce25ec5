// Copyright 2026 The natres Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "natres/search/space.hpp"

namespace natres::search {

enum class TrialStatus { complete, stopped_early, failed };

std::string to_string(TrialStatus s);
TrialStatus parse_trial_status(const std::string& s);

struct TrialResult {
  int trial_id = 0;
  HyperPoint point;
  double main_acc = 0.0;
  double backdoor_acc = 0.0;
  std::uint64_t seed = 0;
  int resource = 0;  // epochs trained
  TrialStatus status = TrialStatus::complete;
  std::string error;  // failed trials only

  // Stopped-early trials carry accuracies from their last rung.
  bool has_metrics() const { return status != TrialStatus::failed; }
};

// alpha = delta_backdoor / (delta_main + delta_backdoor).
double alpha_from_tradeoff(double delta_main, double delta_backdoor);

// alpha * A_main - (1 - alpha) * A_backdoor.
double joint_score(const TrialResult& r, double alpha);

// Non-dominated set under (max A_main, min A_backdoor) over complete
// results, ordered by A_main descending. Exact ties keep the lowest id.
std::vector<TrialResult> pareto_frontier(const std::vector<TrialResult>& results);

// Highest joint score among complete results; ties go to the lower id.
// Throws when none is complete.
const TrialResult& best_by_joint_score(const std::vector<TrialResult>& results, double alpha);

// Epoch budgets of successive-halving rungs: min_epochs * reduction^k up to
// and including max_epochs (the last rung is clamped to max_epochs).
std::vector<int> asha_rungs(int min_epochs, int max_epochs, int reduction);

// Indices into `rung` of the top ceil(k / reduction) trials by joint score
// (failed trials rank last, ties to the lower id), in rank order.
std::vector<std::size_t> asha_select(const std::vector<TrialResult>& rung, int reduction, double alpha);

struct ParamImportance {
  std::string name;
  double main = 0.0;
  double backdoor = 0.0;
};

inline constexpr int kImportanceBins = 8;

// Share of objective variance explained by each parameter's marginal bins:
// 8 equal-width bins for intervals (in log10 for log intervals), one bin per
// value otherwise. Needs at least 20 complete results.
std::vector<ParamImportance> importance(const std::vector<TrialResult>& results,
                                        const SearchSpace& space);

// The same decomposition for one objective vector, exposed for custom studies.
double importance_score(const std::vector<HyperPoint>& points, const std::vector<double>& objective,
                        const ParamDomain& domain);

}  // namespace natres::search
