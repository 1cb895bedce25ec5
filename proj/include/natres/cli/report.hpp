// Copyright 2026 The natres Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "natres/cli/config.hpp"
#include "natres/search/pipeline.hpp"

namespace natres::cli {

inline constexpr const char* kToolVersion = "0.3.0";

// Everything a run reports. `generated_at` is the only field that differs
// between reruns of the same config and seed.
Json report_json(const search::PipelineReport& rep, const RunConfig& cfg, const std::string& generated_at);

// "77.3 -> 75.1 (-2.2)" and "0.0091 -> 0.0136 (x1.49)".
std::string accuracy_row(double before, double after);
std::string resistance_row(const resistance::ResistancePoint& before, const resistance::ResistancePoint& after);

// frontier.csv: trial_id, main_acc, backdoor_acc, joint_score, selected,
// then one column per hyperparameter of the Stage-2 space.
void write_frontier_csv(std::ostream& out, const std::vector<search::TrialResult>& frontier, double alpha,
                        int selected, const search::SearchSpace& space);
struct FrontierRow {
  int trial_id = 0;
  double main_acc = 0.0;
  double backdoor_acc = 0.0;
  double joint_score = 0.0;
  bool selected = false;
  search::HyperPoint point;
};
// Column types come from the space the frontier was written with.
std::vector<FrontierRow> read_frontier_csv(const std::filesystem::path& path, const search::SearchSpace& space);

// Scatter of every complete trial (A_main vs A_backdoor) with the frontier
// drawn as a step line and the selection ringed.
void write_frontier_svg(std::ostream& out, const std::vector<search::TrialResult>& trials,
                        const std::vector<search::TrialResult>& frontier, int selected);

// report.json, frontier.csv, frontier.svg and curves/*.csv under dir.
void write_outputs(const std::filesystem::path& dir, const search::PipelineReport& rep, const RunConfig& cfg,
                   const std::string& generated_at);

// UTC, second resolution.
std::string utc_timestamp();

}  // namespace natres::cli
