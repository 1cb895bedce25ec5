// Copyright 2026 The natres Authors
// SPDX-License-Identifier: Apache-2.0

#include "natres/search/trials.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "natres/error.hpp"

namespace natres::search {

std::string to_string(TrialStatus s) {
  switch (s) {
    case TrialStatus::complete: return "complete";
    case TrialStatus::stopped_early: return "stopped-early";
    case TrialStatus::failed: return "failed";
  }
  return "failed";
}

TrialStatus parse_trial_status(const std::string& s) {
  if (s == "complete") return TrialStatus::complete;
  if (s == "stopped-early") return TrialStatus::stopped_early;
  if (s == "failed") return TrialStatus::failed;
  throw InvalidArgument("unknown trial status '" + s + "'");
}

double alpha_from_tradeoff(double delta_main, double delta_backdoor) {
  if (!(delta_main >= 0.0 && delta_backdoor >= 0.0)) {
    throw InvalidArgument("alpha_from_tradeoff: deltas must be >= 0");
  }
  if (delta_main == 0.0 && delta_backdoor == 0.0) {
    throw InvalidArgument("alpha_from_tradeoff: deltas cannot both be 0");
  }
  return delta_backdoor / (delta_main + delta_backdoor);
}

double joint_score(const TrialResult& r, double alpha) {
  return alpha * r.main_acc - (1.0 - alpha) * r.backdoor_acc;
}

std::vector<TrialResult> pareto_frontier(const std::vector<TrialResult>& results) {
  std::vector<const TrialResult*> pts;
  for (const auto& r : results) {
    if (r.status == TrialStatus::complete) pts.push_back(&r);
  }
  if (pts.empty()) throw InvalidArgument("pareto_frontier: no complete results");
  std::sort(pts.begin(), pts.end(), [](const TrialResult* a, const TrialResult* b) {
    if (a->main_acc != b->main_acc) return a->main_acc > b->main_acc;
    if (a->backdoor_acc != b->backdoor_acc) return a->backdoor_acc < b->backdoor_acc;
    return a->trial_id < b->trial_id;
  });
  // Sweep by falling A_main: a point survives only if its backdoor accuracy
  // beats everything with at least its main accuracy.
  std::vector<TrialResult> front;
  double best_bd = INFINITY;
  for (const TrialResult* r : pts) {
    if (r->backdoor_acc < best_bd) {
      front.push_back(*r);
      best_bd = r->backdoor_acc;
    }
  }
  return front;
}

const TrialResult& best_by_joint_score(const std::vector<TrialResult>& results, double alpha) {
  const TrialResult* best = nullptr;
  double best_score = 0.0;
  for (const auto& r : results) {
    if (r.status != TrialStatus::complete) continue;
    const double s = joint_score(r, alpha);
    if (best == nullptr || s > best_score || (s == best_score && r.trial_id < best->trial_id)) {
      best = &r;
      best_score = s;
    }
  }
  if (best == nullptr) throw InvalidArgument("no complete trial to select from");
  return *best;
}

std::vector<int> asha_rungs(int min_epochs, int max_epochs, int reduction) {
  if (min_epochs < 1 || max_epochs < min_epochs) throw InvalidArgument("asha: need 1 <= min_epochs <= max_epochs");
  if (reduction < 2) throw InvalidArgument("asha: reduction factor must be >= 2");
  std::vector<int> rungs;
  long long r = min_epochs;
  while (r < max_epochs) {
    rungs.push_back(static_cast<int>(r));
    r *= reduction;
  }
  rungs.push_back(max_epochs);
  return rungs;
}

std::vector<std::size_t> asha_select(const std::vector<TrialResult>& rung, int reduction, double alpha) {
  if (reduction < 2) throw InvalidArgument("asha_select: reduction factor must be >= 2");
  if (rung.empty()) throw InvalidArgument("asha_select: empty rung");
  std::vector<std::size_t> order(rung.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const TrialResult& x = rung[a];
    const TrialResult& y = rung[b];
    if (x.has_metrics() != y.has_metrics()) return x.has_metrics();
    if (x.has_metrics()) {
      const double sx = joint_score(x, alpha);
      const double sy = joint_score(y, alpha);
      if (sx != sy) return sx > sy;
    }
    return x.trial_id < y.trial_id;
  });
  const std::size_t keep = (rung.size() + static_cast<std::size_t>(reduction) - 1) /
                           static_cast<std::size_t>(reduction);
  order.resize(keep);
  return order;
}

namespace {

// Bin label for one value of one domain.
std::string bin_of(const ParamDomain& d, const ParamValue& v) {
  if (d.kind == DomainKind::categorical || d.kind == DomainKind::int_set) return format_value(v);
  double x = std::holds_alternative<double>(v) ? std::get<double>(v)
                                               : static_cast<double>(std::get<std::int64_t>(v));
  double lo = d.lo, hi = d.hi;
  if (d.kind == DomainKind::log_interval) {
    x = std::log10(x);
    lo = std::log10(lo);
    hi = std::log10(hi);
  }
  const int b = std::clamp(static_cast<int>(std::floor((x - lo) / (hi - lo) * kImportanceBins)), 0,
                           kImportanceBins - 1);
  return std::to_string(b);
}

}  // namespace

double importance_score(const std::vector<HyperPoint>& points, const std::vector<double>& objective,
                        const ParamDomain& domain) {
  if (points.size() != objective.size()) throw InvalidArgument("importance: size mismatch");
  const auto n = static_cast<double>(objective.size());
  double mean = 0.0;
  for (const double y : objective) mean += y;
  mean /= n;
  double total = 0.0;
  for (const double y : objective) total += (y - mean) * (y - mean);
  if (!(total > 1e-24 * n)) return 0.0;
  std::map<std::string, std::pair<double, double>> bins;  // label -> (sum, count)
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto it = points[i].find(domain.name);
    if (it == points[i].end()) throw InvalidArgument("importance: trial lacks parameter '" + domain.name + "'");
    auto& [sum, count] = bins[bin_of(domain, it->second)];
    sum += objective[i];
    count += 1.0;
  }
  double between = 0.0;
  for (const auto& [label, sc] : bins) {
    const double m = sc.first / sc.second;
    between += sc.second * (m - mean) * (m - mean);
  }
  return std::clamp(between / total, 0.0, 1.0);
}

std::vector<ParamImportance> importance(const std::vector<TrialResult>& results,
                                        const SearchSpace& space) {
  std::vector<HyperPoint> points;
  std::vector<double> main, bd;
  for (const auto& r : results) {
    if (r.status != TrialStatus::complete) continue;
    points.push_back(r.point);
    main.push_back(r.main_acc);
    bd.push_back(r.backdoor_acc);
  }
  if (points.size() < 20) throw InvalidArgument("importance: need at least 20 complete results");
  std::vector<ParamImportance> out;
  for (const auto& d : space.domains()) {
    out.push_back({d.name, importance_score(points, main, d), importance_score(points, bd, d)});
  }
  return out;
}

}  // namespace natres::search
