// Copyright 2026 The natres Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance gate: one PASS/FAIL line per criterion. Each check compares the
// library against an oracle written here, not against the library itself.
//
//   acceptance [--only 1,5] [--expect-fail 7] [--out DIR]
//
// Exit status is 0 when the failing criteria are exactly the --expect-fail
// set (empty by default). Expected failures still print FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "natres/cli/config.hpp"
#include "natres/cli/report.hpp"
#include "natres/data/dataset.hpp"
#include "natres/fed/fedavg.hpp"
#include "natres/nn/model.hpp"
#include "natres/nn/train.hpp"
#include "natres/poison/poison.hpp"
#include "natres/resistance/resistance.hpp"
#include "natres/rng.hpp"
#include "natres/search/pipeline.hpp"
#include "natres/search/runner.hpp"
#include "natres/search/trials.hpp"
#include "support/reference_net.hpp"

namespace fs = std::filesystem;
using namespace natres;
using cli::Json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double cpu_seconds() { return static_cast<double>(std::clock()) / CLOCKS_PER_SEC; }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------- 1

nn::ModelSpec random_model(Rng& rng) {
  nn::ModelSpec s;
  s.activation = static_cast<nn::Activation>(rng.uniform_int(0, 2));
  s.num_classes = static_cast<int>(rng.uniform_int(2, 4));
  const int hidden_layers = static_cast<int>(rng.uniform_int(0, 2));
  for (int i = 0; i < hidden_layers; ++i) s.hidden_widths.push_back(static_cast<int>(rng.uniform_int(2, 6)));
  if (rng.uniform() < 0.3) {
    s.kind = nn::ModelKind::conv2;
    s.input_dims = {static_cast<int>(rng.uniform_int(4, 6)), static_cast<int>(rng.uniform_int(4, 6)),
                    static_cast<int>(rng.uniform_int(1, 2))};
    for (int i = 0; i < 2; ++i) s.conv.push_back({static_cast<int>(rng.uniform_int(1, 3)), 2, 1});
    s.hidden_widths = {static_cast<int>(rng.uniform_int(2, 6))};  // conv nets take one dense layer
  } else {
    s.kind = nn::ModelKind::mlp;
    s.input_dims = {static_cast<int>(rng.uniform_int(2, 8))};
  }
  return s;
}

Outcome gradient_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(2026);
  double worst = 0.0;
  std::size_t params = 0;
  for (int m = 0; m < 20; ++m) {
    const nn::ModelSpec spec = random_model(rng);
    const nn::ModelParams p = nn::init_model(spec, rng.next_u64());
    const std::size_t rows_n = 5;
    std::vector<float> x(rows_n * spec.input_len());
    for (float& v : x) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    std::vector<int> y(rows_n);
    for (int& v : y) v = static_cast<int>(rng.uniform_int(0, spec.num_classes - 1));
    const auto d = data::Dataset::create(spec.input_len(), std::move(x), std::move(y), spec.num_classes);
    std::vector<std::size_t> rows(rows_n);
    std::iota(rows.begin(), rows.end(), 0);
    const auto lg = nn::loss_and_grad(p, spec, nn::Batch{&d, rows, {}});
    std::vector<double> w(p.values.begin(), p.values.end());
    const double h = 1e-4;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double saved = w[i];
      w[i] = saved + h;
      const double up = testing::ref_mean_loss(spec, w, d, rows);
      w[i] = saved - h;
      const double down = testing::ref_mean_loss(spec, w, d, rows);
      w[i] = saved;
      const double numeric = (up - down) / (2 * h);
      // Components below 1e-2 are compared in absolute terms: float32
      // accumulation noise dominates their relative error.
      const double denom = std::max({std::abs(double{lg.grad[i]}), std::abs(numeric), 1e-2});
      worst = std::max(worst, std::abs(lg.grad[i] - numeric) / denom);
    }
    params += w.size();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {worst <= 1e-4 && secs < 10.0,
          "max relative error " + fmt("%.2e", worst) + " over 20 models / " + std::to_string(params) + " parameters, " +
              fmt("%.2f", secs) + " s"};
}

// ---------------------------------------------------------------- 2

Outcome exact_math() {
  std::vector<std::string> bad;
  const double a = search::alpha_from_tradeoff(3, 100);
  if (std::abs(a - 100.0 / 103.0) > 1e-12) bad.push_back("alpha " + fmt("%.17g", a));
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    search::TrialResult t;
    t.main_acc = rng.uniform();
    t.backdoor_acc = rng.uniform();
    if (search::joint_score(t, 1.0) != t.main_acc) bad.push_back("joint(alpha=1) != A_main");
    if (search::joint_score(t, 0.0) != -t.backdoor_acc) bad.push_back("joint(alpha=0) != -A_backdoor");
    if (bad.size() > 3) break;
  }
  const auto g = resistance::exp_grid(1e-5, 1e-2, 27);
  if (g.size() != 28 || g[0] != 0.0) bad.push_back("grid shape");
  else {
    if (std::abs(g[1] - 1e-5) > 1e-5 * 1e-12 || std::abs(g[27] - 1e-2) > 1e-2 * 1e-12) bad.push_back("grid endpoints");
    const double ratio = std::pow(1e3, 1.0 / 26.0);
    for (std::size_t i = 2; i < g.size(); ++i) {
      if (std::abs(g[i] / g[i - 1] - ratio) > 1e-9) {
        bad.push_back("grid not geometric");
        break;
      }
    }
  }
  std::string detail = "alpha(3, 100) = " + fmt("%.15f", a) + ", grid 0 + " + std::to_string(g.size() - 1) +
                       " points " + fmt("%.3g", g.size() > 1 ? g[1] : 0) + " .. " + fmt("%.3g", g.back());
  for (const auto& b : bad) detail += "; " + b;
  return {bad.empty(), detail};
}

// ---------------------------------------------------------------- 3

std::vector<int> brute_frontier(const std::vector<search::TrialResult>& ts) {
  std::vector<int> ids;
  for (const auto& t : ts) {
    if (t.status != search::TrialStatus::complete) continue;
    bool kept = true;
    for (const auto& u : ts) {
      if (u.status != search::TrialStatus::complete || u.trial_id == t.trial_id) continue;
      const bool dominates = u.main_acc >= t.main_acc && u.backdoor_acc <= t.backdoor_acc &&
                             (u.main_acc > t.main_acc || u.backdoor_acc < t.backdoor_acc);
      const bool earlier_twin =
          u.main_acc == t.main_acc && u.backdoor_acc == t.backdoor_acc && u.trial_id < t.trial_id;
      if (dominates || earlier_twin) {
        kept = false;
        break;
      }
    }
    if (kept) ids.push_back(t.trial_id);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

Outcome pareto_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(33);
  int mismatches = 0, unordered = 0;
  std::size_t total = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const auto n = static_cast<int>(rng.uniform_int(1, 500));
    const auto levels = static_cast<int>(rng.uniform_int(2, 60));  // coarse values force ties
    std::vector<search::TrialResult> ts(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      auto& t = ts[static_cast<std::size_t>(i)];
      t.trial_id = i;
      t.main_acc = static_cast<double>(rng.uniform_int(0, levels)) / levels;
      t.backdoor_acc = static_cast<double>(rng.uniform_int(0, levels)) / levels;
      const double r = rng.uniform();
      t.status = r < 0.05 ? search::TrialStatus::failed
                          : r < 0.15 ? search::TrialStatus::stopped_early : search::TrialStatus::complete;
    }
    const auto front = search::pareto_frontier(ts);
    std::vector<int> got;
    for (const auto& f : front) got.push_back(f.trial_id);
    for (std::size_t i = 1; i < front.size(); ++i) unordered += front[i].main_acc > front[i - 1].main_acc;
    std::sort(got.begin(), got.end());
    mismatches += got != brute_frontier(ts);
    total += static_cast<std::size_t>(n);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {mismatches == 0 && unordered == 0 && secs < 5.0,
          std::to_string(mismatches) + "/100 instances differ from brute force (" + std::to_string(total) +
              " trials), " + std::to_string(unordered) + " ordering errors, " + fmt("%.3f", secs) + " s"};
}

// ---------------------------------------------------------------- 4

int oracle_label(poison::Kind kind, int y, int target, int classes) {
  if (kind == poison::Kind::mixed_labels) return y < (classes + 1) / 2 ? 0 : 1;
  return target;
}

Outcome poisoning_exactness() {
  Rng rng(404);
  int bad_count = 0, bad_outside = 0, bad_range = 0, bad_label = 0, capped = 0;
  std::size_t poisoned_rows = 0;
  const poison::Kind kinds[] = {poison::Kind::primitive, poison::Kind::single_pixel, poison::Kind::clean_label,
                                poison::Kind::composite_dynamic, poison::Kind::mixed_labels};
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(1, 1500));
    const double p = trial % 50 == 0 ? (trial % 100 == 0 ? 0.0 : 1.0) : rng.uniform();
    const int classes = static_cast<int>(rng.uniform_int(2, 6));
    const bool integer = rng.uniform() < 0.5;
    std::vector<int> dims;
    std::size_t len;
    if (rng.uniform() < 0.4) {
      dims = {static_cast<int>(rng.uniform_int(3, 8)), static_cast<int>(rng.uniform_int(3, 8)),
              static_cast<int>(rng.uniform_int(1, 3))};
      len = static_cast<std::size_t>(dims[0] * dims[1] * dims[2]);
    } else {
      len = static_cast<std::size_t>(rng.uniform_int(4, 60));
    }
    const float lo = integer ? 0.0f : static_cast<float>(rng.uniform(-2, 0));
    const float hi = integer ? 255.0f : static_cast<float>(rng.uniform(0.5, 3));
    std::vector<float> x(n * len);
    for (float& v : x) {
      v = integer ? static_cast<float>(rng.uniform_int(0, 255)) : static_cast<float>(rng.uniform(lo, hi));
    }
    std::vector<int> y(n);
    for (int& v : y) v = static_cast<int>(rng.uniform_int(0, classes - 1));
    const auto d = data::Dataset::create(len, x, y, classes, integer ? data::DType::integer : data::DType::floating,
                                         dims);
    const poison::Kind kind = kinds[trial % 5];
    const int target = static_cast<int>(rng.uniform_int(0, classes - 1));
    const double coverage = std::min(0.5, std::max(0.05, 1.0 / static_cast<double>(len)));
    const auto spec = poison::make_backdoor(kind, d, {coverage, target, p}, rng.next_u64());
    const auto view = poison::wrap_dataset(d, spec);

    auto expected = static_cast<std::size_t>(std::floor(p * static_cast<double>(n)));
    if (kind == poison::Kind::clean_label) {
      const auto in_class = static_cast<std::size_t>(std::count(y.begin(), y.end(), target));
      if (expected > in_class) ++capped;
      expected = std::min(expected, in_class);
    }
    const auto& idx = view.poisoned_indices();
    const std::set<std::size_t> chosen(idx.begin(), idx.end());
    bad_count += idx.size() != expected || chosen.size() != idx.size();

    const auto m = view.materialize();
    std::vector<float> row(len);
    for (std::size_t i = 0; i < n; ++i) {
      const int label = view.get(i, row);
      const bool same_as_view = std::memcmp(row.data(), m.row(i).data(), len * sizeof(float)) == 0 && label == m.label(i);
      if (!chosen.count(i)) {
        const bool same = std::memcmp(row.data(), &x[i * len], len * sizeof(float)) == 0 && label == y[i];
        bad_outside += !same || !same_as_view;
        continue;
      }
      ++poisoned_rows;
      bad_label += label != oracle_label(kind, y[i], target, classes) || !same_as_view;
      for (const float v : row) {
        if (v < d.x_min() || v > d.x_max() || (integer && v != std::floor(v))) {
          ++bad_range;
          break;
        }
      }
    }
    for (const float v : spec.trigger.pattern) {
      if (v < d.x_min() || v > d.x_max() || (integer && v != std::floor(v))) ++bad_range;
    }
  }
  const bool pass = bad_count == 0 && bad_outside == 0 && bad_range == 0 && bad_label == 0;
  return {pass, "1000 cases, " + std::to_string(poisoned_rows) + " poisoned rows: size errors " +
                    std::to_string(bad_count) + ", changed clean rows " + std::to_string(bad_outside) +
                    ", out-of-range/dtype " + std::to_string(bad_range) + ", label errors " +
                    std::to_string(bad_label) + " (clean-label capped at class size in " + std::to_string(capped) +
                    " cases)"};
}

// ---------------------------------------------------------------- desk runs

struct DeskRun {
  search::PipelineReport rep;
  cli::RunConfig cfg;
  double cpu = 0.0;
  fs::path dir;
};

class DeskRuns {
 public:
  explicit DeskRuns(fs::path root) : root_(std::move(root)) {}

  // Desk profile; the master seed also seeds the blobs.
  const DeskRun& get(std::uint64_t seed, int workers) {
    const auto key = std::make_pair(seed, workers);
    if (auto it = runs_.find(key); it != runs_.end()) return it->second;
    DeskRun r;
    r.cfg = cli::parse_config(Json{{"seed", seed}, {"dataset", {{"seed", seed}}}});
    const auto splits = cli::load_data(r.cfg);
    search::TrialLog log;
    const double c0 = cpu_seconds();
    r.rep = search::run_pipeline(r.cfg.pipeline, {&splits.train, &splits.val, &splits.test}, log, workers);
    r.cpu = cpu_seconds() - c0;
    r.dir = root_ / ("seed" + std::to_string(seed) + "_w" + std::to_string(workers));
    fs::remove_all(r.dir);
    cli::write_outputs(r.dir, r.rep, r.cfg, cli::utc_timestamp());
    std::cerr << "  desk pipeline seed " << seed << " workers " << workers << ": " << fmt("%.0f", r.cpu)
              << " s CPU, status " << search::to_string(r.rep.status) << '\n';
    return runs_.emplace(key, std::move(r)).first->second;
  }

 private:
  fs::path root_;
  std::map<std::pair<std::uint64_t, int>, DeskRun> runs_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// ---------------------------------------------------------------- 5

Outcome determinism(DeskRuns& runs) {
  const DeskRun& a = runs.get(1, 1);
  const DeskRun& b = runs.get(1, 8);
  Json ja = Json::parse(slurp(a.dir / "report.json"));
  Json jb = Json::parse(slurp(b.dir / "report.json"));
  ja.erase("generated_at");
  jb.erase("generated_at");
  std::vector<std::string> diffs;
  if (ja.dump() != jb.dump()) diffs.push_back("report.json");
  std::size_t files = 1;
  for (const auto& e : fs::recursive_directory_iterator(a.dir)) {
    if (!e.is_regular_file() || e.path().filename() == "report.json") continue;
    const auto rel = fs::relative(e.path(), a.dir);
    ++files;
    if (slurp(e.path()) != slurp(b.dir / rel)) diffs.push_back(rel.string());
  }
  std::string detail = std::to_string(files) + " output files compared, 1 vs 8 workers; CPU " +
                       fmt("%.0f", a.cpu) + " s + " + fmt("%.0f", b.cpu) + " s";
  for (const auto& d : diffs) detail += "; differs: " + d;
  return {diffs.empty() && a.cpu + b.cpu < 15 * 60, detail};
}

// ---------------------------------------------------------------- 6

Outcome degenerate_fedavg() {
  const auto train = data::synth_blobs(1200, 4, 20, 3.0, 11);
  const auto val = data::synth_blobs(300, 4, 20, 3.0, 12);
  nn::ModelSpec model;
  model.input_dims = {20};
  model.hidden_widths = {16};
  model.num_classes = 4;
  fed::FedConfig c;
  c.num_users = 1;
  c.round_size = 1;
  c.rounds = 5;
  c.local_epochs = 2;
  c.global_lr = 1.0;
  c.noise_sigma = 0.0;
  c.local.learning_rate = 0.05;
  c.local.batch_size = 16;
  c.local.seed = 3;
  c.seed = 4;
  const fed::FedData fd{&train, data::shard_users(train, 1, 7).shards, &val};
  const auto spec = poison::make_backdoor(poison::Kind::primitive, train, {0.1, 0, 0.0}, 5);
  const auto fed_run = fed::fed_train(c, model, fd, {}, spec);
  nn::TrainConfig central = c.local;
  central.epochs = c.rounds * c.local_epochs;
  const auto ref = nn::train(train.subset(fd.shards[0]), model, central);
  double worst = 0.0;
  for (std::size_t i = 0; i < ref.params.values.size(); ++i) {
    worst = std::max(worst, static_cast<double>(std::abs(fed_run.params.values[i] - ref.params.values[i])));
  }
  const bool same_size = fed_run.params.values.size() == ref.params.values.size();
  return {same_size && worst <= 1e-5, "max parameter difference " + fmt("%.2e", worst) + " over " +
                                          std::to_string(ref.params.values.size()) + " parameters, " +
                                          std::to_string(c.rounds) + " rounds x " +
                                          std::to_string(c.local_epochs) + " local epochs"};
}

// ---------------------------------------------------------------- 7, 8

const std::uint64_t kSeeds[] = {1, 2, 3};

Outcome resistance_boost(DeskRuns& runs) {
  std::vector<double> ratios, drops;
  double cpu = 0.0;
  std::string per_seed;
  for (const auto s : kSeeds) {
    const DeskRun& r = runs.get(s, 1);
    cpu += r.cpu;
    const double ratio = r.rep.resistance_ratio();
    const double drop = 100.0 * (r.rep.main_base() - r.rep.main_resistant());
    ratios.push_back(std::isnan(ratio) ? 0.0 : ratio);
    drops.push_back(std::isnan(drop) ? 100.0 : drop);
    per_seed += " [seed " + std::to_string(s) + ": " + cli::resistance_row(r.rep.audit2_base.point, r.rep.audit2_resistant.point) +
                ", main " + cli::accuracy_row(r.rep.main_base(), r.rep.main_resistant()) + "]";
  }
  const double mr = median(ratios), md = median(drops);
  return {mr >= 2.0 && md <= 5.0 && cpu <= 30 * 60,
          "median ratio x" + fmt("%.2f", mr) + " (need >= 2), median main drop " + fmt("%.1f", md) +
              " points (need <= 5), CPU " + fmt("%.0f", cpu) + " s;" + per_seed};
}

Outcome ordering(DeskRuns& runs) {
  std::map<std::string, std::vector<double>> p;
  for (const auto s : kSeeds) {
    const DeskRun& r = runs.get(s, 1);
    p["primitive"].push_back(r.rep.audit2_base.point.ordering_value());
    for (const auto& v : r.rep.variants) {
      p[v.spec.name].push_back(v.error.empty() ? v.base.point.ordering_value() : HUGE_VAL);
    }
  }
  std::map<std::string, double> med;
  for (const auto& [k, v] : p) med[k] = median(v);
  std::vector<std::string> broken;
  auto le = [&](const std::string& a, const std::string& b) {
    if (!med.count(a) || !med.count(b)) broken.push_back("missing " + (med.count(a) ? b : a));
    else if (!(med[a] <= med[b])) broken.push_back(a + " > " + b);
  };
  le("primitive-s0.10", "primitive");
  le("primitive", "single-pixel");
  for (const char* v : {"single-pixel", "clean-label", "composite-dynamic", "mixed-labels"}) le("primitive", v);
  std::string detail = "median p°:";
  for (const auto& [k, v] : med) detail += " " + k + "=" + (std::isinf(v) ? std::string("inf") : fmt("%.4g", v));
  for (const auto& b : broken) detail += "; violated: " + b;
  return {broken.empty(), detail};
}

// ---------------------------------------------------------------- 9

// Class is floor(4 * x0); a trigger writing a high value at x0 is a natural
// backdoor for class 3.
data::Dataset threshold_dataset(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> x(n * 40);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < 40; ++j) x[i * 40 + j] = static_cast<float>(rng.uniform());
    y[i] = std::min(3, static_cast<int>(x[i * 40] * 4));
  }
  return data::Dataset::create_with_range(40, std::move(x), std::move(y), 4, 0.0f, 1.0f, data::DType::floating);
}

Outcome sanity_behavior() {
  const auto train = threshold_dataset(3000, 1);
  const auto pool = threshold_dataset(1000, 2);
  nn::ModelSpec m;
  m.input_dims = {40};
  m.hidden_widths = {16};
  m.num_classes = 4;
  nn::TrainConfig cfg;
  cfg.optimizer = nn::Optimizer::adam;
  cfg.learning_rate = 0.01;
  cfg.epochs = 15;
  cfg.batch_size = 32;
  const auto model = nn::train(train, m, cfg).params;
  poison::PoisonSpec spec = poison::make_backdoor(poison::Kind::primitive, pool, {0.05, 3, 0.1}, 40);
  spec.trigger.mask_start = 0;
  spec.trigger.pattern.assign(spec.trigger.mask_len, 0.99f);
  const auto r = poison::check_trigger_sanity(model, m, spec, pool);
  const bool regenerated = r.attempts > 1 && r.backdoor_accuracy.back() <= poison::sanity_threshold(4);

  cli::RunConfig desk = cli::parse_config(Json::object());
  const auto splits = cli::load_data(desk);
  nn::TrainConfig base = desk.pipeline.base;
  base.seed = 77;
  const auto clean = nn::train(splits.train, desk.pipeline.model, base).params;
  int passed = 0;
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const auto t = poison::make_backdoor(poison::Kind::primitive, splits.train, {0.05, 0, 0.0}, derive_seed(1234, "t", {s}));
    passed += poison::check_trigger_sanity(clean, desk.pipeline.model, t, splits.val).attempts == 1;
  }
  return {regenerated && passed >= 9,
          "constructed: " + std::to_string(r.attempts) + " attempts, backdoor acc " +
              fmt("%.2f", r.backdoor_accuracy.front()) + " -> " + fmt("%.2f", r.backdoor_accuracy.back()) +
              "; blobs: " + std::to_string(passed) + "/10 random triggers pass first time"};
}

// ---------------------------------------------------------------- 10

Outcome asha_accounting() {
  cli::RunConfig desk = cli::parse_config(Json::object());
  const auto splits = cli::load_data(desk);
  const auto& p = desk.pipeline;
  auto spec = poison::make_backdoor(p.kind, splits.train, {p.backdoor.coverage, p.backdoor.target_label, 0.02},
                                    derive_seed(p.seed, "trigger"));
  const auto poisoned = poison::wrap_dataset(splits.train, spec).materialize();
  const auto val_eval = poison::poison_eval_set(splits.val, spec);
  const search::TrialContext ctx{&poisoned, &splits.val, &val_eval, p.model, p.base};
  search::StageConfig st;
  st.name = "asha";
  st.trials = 27;
  st.asha = true;
  st.reduction = 3;
  st.min_epochs = 1;
  st.max_epochs = 9;
  st.alpha = p.alpha;
  st.seed = derive_seed(p.seed, "acceptance-asha");
  search::TrialLog log;
  const auto asha = search::run_stage(p.space, ctx, st, log);
  search::StageConfig full = st;
  full.asha = false;
  full.name = "full";
  const auto flat = search::run_stage(p.space, ctx, full, log);
  const double a = search::joint_score(search::best_by_joint_score(asha.trials, p.alpha), p.alpha);
  const double f = search::joint_score(search::best_by_joint_score(flat.trials, p.alpha), p.alpha);
  std::string rungs;
  for (std::size_t i = 0; i < asha.rung_epochs.size(); ++i) {
    rungs += (i ? " + " : "") + std::to_string(asha.rung_members[i].size()) + "x" + std::to_string(asha.rung_epochs[i]);
  }
  return {asha.epochs_consumed == 81 && flat.epochs_consumed == 243 && std::abs(f - a) <= 0.05,
          "epochs " + rungs + " = " + std::to_string(asha.epochs_consumed) + " (full " +
              std::to_string(flat.epochs_consumed) + "); best joint full " + fmt("%.4f", f) + " vs asha " +
              fmt("%.4f", a) + " (gap " + fmt("%.4f", std::abs(f - a)) + ")"};
}

// ---------------------------------------------------------------- 11

Outcome importance_sanity() {
  const auto space = search::default_space();
  std::vector<search::TrialResult> ts;
  for (int i = 0; i < 200; ++i) {
    search::TrialResult t;
    t.trial_id = i;
    t.point = search::sample_point(space, derive_seed(11, "importance", {static_cast<std::uint64_t>(i)}));
    const double lr = std::get<double>(t.point.at("learning_rate"));
    const double z = std::log10(lr);
    t.main_acc = 0.9 - 0.05 * (z + 2.5) * (z + 2.5);
    t.backdoor_acc = 0.1 + 0.2 * (z + 5.0);
    ts.push_back(std::move(t));
  }
  const auto table = search::importance(ts, space);
  bool ok = !table.empty();
  double lr_min = 0.0, other_max = 0.0;
  for (const auto& r : table) {
    if (r.name == "learning_rate") lr_min = std::min(r.main, r.backdoor);
    else other_max = std::max({other_max, r.main, r.backdoor});
  }
  ok = ok && lr_min >= 0.8 && other_max <= 0.1;
  return {ok, "learning_rate " + fmt("%.3f", lr_min) + " (min of both objectives), largest other " +
                  fmt("%.3f", other_max) + ", 200 trials"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance gate"};
  std::vector<int> only, expect_fail;
  std::string out = (fs::temp_directory_path() / "natres_acceptance").string();
  app.add_option("--only", only, "criteria to run")->delimiter(',');
  app.add_option("--expect-fail", expect_fail, "criteria known to fail")->delimiter(',');
  app.add_option("--out", out, "directory for desk pipeline outputs");
  CLI11_PARSE(app, argc, argv);

  DeskRuns runs(out);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient oracle", gradient_oracle},
      {"exact math", exact_math},
      {"pareto oracle", pareto_oracle},
      {"poisoning exactness", poisoning_exactness},
      {"determinism 1 vs 8 workers", [&] { return determinism(runs); }},
      {"degenerate fedavg", degenerate_fedavg},
      {"desk resistance boost", [&] { return resistance_boost(runs); }},
      {"ordering properties", [&] { return ordering(runs); }},
      {"sanity check behavior", sanity_behavior},
      {"asha accounting", asha_accounting},
      {"importance sanity", importance_sanity},
  };

  std::set<int> failed;
  int ran = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    ++ran;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) failed.insert(id);
    std::cout << (o.pass ? "PASS" : "FAIL") << ' ' << id << ' ' << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  std::set<int> expected;
  for (const int id : expect_fail) {
    if (only.empty() || std::find(only.begin(), only.end(), id) != only.end()) expected.insert(id);
  }
  std::cout << (ran - static_cast<int>(failed.size())) << '/' << ran << " criteria pass";
  if (!expected.empty()) {
    std::cout << "; expected failures:";
    for (const int id : expected) std::cout << ' ' << id;
  }
  std::cout << '\n';
  return failed == expected ? 0 : 1;
}
