// Copyright 2026 The natres Authors
// SPDX-License-Identifier: Apache-2.0

#include "natres/cli/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "natres/resistance/resistance.hpp"
#include "natres/rng.hpp"
#include "natres/search/trial_log.hpp"

namespace natres::cli {

namespace {

Json desk_profile() {
  return Json::parse(R"({
    "seed": 1,
    "output_dir": "results",
    "dataset": {"source": "blobs", "samples": 10000, "dims": 100, "classes": 10, "separation": 2.5,
                "train": 5000, "val_fraction": 0.4, "seed": 1},
    "model": {"kind": "mlp", "hidden": [32], "activation": "relu", "dropout": 0.0},
    "train": {"epochs": 10, "batch_size": 64, "learning_rate": 0.01, "momentum": 0.0, "weight_decay": 0.0,
              "optimizer": "sgd", "scheduler": "cosine-annealing"},
    "stage1_space": "generic",
    "space": "regularized",
    "poison": {"kind": "primitive", "coverage": 0.05, "target": 0,
               "variants": [{"name": "primitive-s0.10", "kind": "primitive", "coverage": 0.10},
                            {"name": "single-pixel", "kind": "single-pixel"},
                            {"name": "clean-label", "kind": "clean-label"},
                            {"name": "composite-dynamic", "kind": "composite-dynamic"},
                            {"name": "mixed-labels", "kind": "mixed-labels"}]},
    "pipeline": {"k": 2.0, "tradeoff": {"delta_main": 5, "delta_backdoor": 100},
                 "stage1_trials": 24, "stage2_trials": 60, "asha": false,
                 "grid": {"min": 1e-4, "max": 0.1, "points": 13}, "repeats": 1,
                 "method": "midpoint", "importance": true}
  })");
}

Json federated_section(int users, double fmin) {
  return Json{{"num_users", users},   {"rounds", 20},       {"round_size", 10},
              {"local_epochs", 1},    {"global_lr", 1.0},   {"noise_sigma", 0.0},
              {"user_poison_rate", 1.0}, {"repeats", 1},
              {"grid", {{"min", fmin}, {"max", 1.0}, {"points", 9}}}};
}

// Tracks the key path of the node being read so errors name it.
class Node {
 public:
  Node(const Json& j, std::string path) : j_(j), path_(std::move(path)) {}

  const Json& json() const { return j_; }
  const std::string& path() const { return path_; }
  bool has(const std::string& key) const { return j_.is_object() && j_.contains(key) && !j_.at(key).is_null(); }
  Node at(const std::string& key) const {
    if (!has(key)) fail(key, "missing");
    return {j_.at(key), child(key)};
  }
  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError("config: " + child(key) + ": " + what);
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("config: " + (path_.empty() ? std::string("<root>") : path_) + ": " + what);
  }

  void require_object() const {
    if (!j_.is_object()) fail("expected an object");
  }
  void allow_only(std::initializer_list<const char*> keys) const {
    require_object();
    const std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : j_.items()) {
      if (!ok.count(k)) fail(k, "unknown key");
    }
  }

  double number() const {
    if (!j_.is_number()) fail("expected a number");
    return j_.get<double>();
  }
  double number(const std::string& key, double fallback) const { return has(key) ? at(key).number() : fallback; }
  long long integer() const {
    if (!j_.is_number_integer()) {
      if (j_.is_number() && std::floor(j_.get<double>()) == j_.get<double>()) return static_cast<long long>(j_.get<double>());
      fail("expected an integer");
    }
    return j_.get<long long>();
  }
  long long integer(const std::string& key, long long fallback) const { return has(key) ? at(key).integer() : fallback; }
  std::string string() const {
    if (!j_.is_string()) fail("expected a string");
    return j_.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) const {
    return has(key) ? at(key).string() : fallback;
  }
  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_boolean()) fail(key, "expected true or false");
    return v.get<bool>();
  }

 private:
  const Json& j_;
  std::string path_;
};

// Runs a parser from another module and re-labels its error with the key path.
template <typename F>
auto with_path(const Node& n, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    n.fail(e.what());
  }
}

// Same, for a value read from n[key].
template <typename F>
auto with_key(const Node& n, const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    n.fail(key, e.what());
  }
}

double positive(const Node& n, const std::string& key, double fallback) {
  const double v = n.number(key, fallback);
  if (!(v > 0.0)) n.fail(key, "must be > 0");
  return v;
}

int positive_int(const Node& n, const std::string& key, long long fallback) {
  const long long v = n.integer(key, fallback);
  if (v < 1 || v > 1'000'000'000) n.fail(key, "must be a positive integer");
  return static_cast<int>(v);
}

double unit(const Node& n, const std::string& key, double fallback) {
  const double v = n.number(key, fallback);
  if (!(v >= 0.0 && v <= 1.0)) n.fail(key, "must lie in [0, 1]");
  return v;
}

std::uint64_t seed_of(const Node& n, const std::string& key, std::uint64_t fallback) {
  if (!n.has(key)) return fallback;
  const Json& v = n.json().at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) n.fail(key, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

std::vector<double> parse_grid(const Node& n) {
  if (n.json().is_array()) {
    std::vector<double> g;
    for (std::size_t i = 0; i < n.json().size(); ++i) g.push_back(Node(n.json()[i], n.path() + "[" + std::to_string(i) + "]").number());
    if (g.empty() || g.front() != 0.0) g.insert(g.begin(), 0.0);
    for (std::size_t i = 1; i < g.size(); ++i) {
      if (!(g[i] > g[i - 1]) || g[i] > 1.0) n.fail("rates must increase strictly within (0, 1]");
    }
    return g;
  }
  n.allow_only({"min", "max", "points"});
  return with_path(n, [&] {
    return resistance::exp_grid(n.at("min").number(), n.at("max").number(), static_cast<int>(n.at("points").integer()));
  });
}

search::SearchSpace parse_space(const Node& n) {
  if (n.json().is_string()) {
    const std::string name = n.string();
    if (name == "regularized") return search::default_space();
    if (name == "generic") return search::generic_space();
    n.fail("unknown space preset '" + name + "' (regularized, generic)");
  }
  if (!n.json().is_array()) n.fail("expected a preset name or a list of domains");
  search::SearchSpace space;
  for (std::size_t i = 0; i < n.json().size(); ++i) {
    const Node d(n.json()[i], n.path() + "[" + std::to_string(i) + "]");
    d.allow_only({"name", "kind", "values", "lo", "hi"});
    const std::string name = d.at("name").string();
    const auto kind = with_key(d, "kind", [&] { return search::parse_domain_kind(d.at("kind").string()); });
    search::ParamDomain dom;
    switch (kind) {
      case search::DomainKind::categorical: {
        std::vector<std::string> vals;
        const Node v = d.at("values");
        if (!v.json().is_array()) v.fail("expected a list");
        for (const auto& x : v.json()) vals.push_back(Node(x, v.path()).string());
        dom = search::ParamDomain::categorical(name, vals);
        break;
      }
      case search::DomainKind::int_set: {
        std::vector<std::int64_t> vals;
        const Node v = d.at("values");
        if (!v.json().is_array()) v.fail("expected a list");
        for (const auto& x : v.json()) vals.push_back(Node(x, v.path()).integer());
        dom = search::ParamDomain::int_set(name, vals);
        break;
      }
      case search::DomainKind::linear_interval:
        dom = search::ParamDomain::linear(name, d.at("lo").number(), d.at("hi").number());
        break;
      case search::DomainKind::log_interval:
        dom = search::ParamDomain::log(name, d.at("lo").number(), d.at("hi").number());
        break;
    }
    with_path(d, [&] {
      space.add(dom);
      return 0;
    });
  }
  return space;
}

nn::ModelSpec parse_model(const Node& n) {
  n.allow_only({"kind", "hidden", "activation", "dropout", "conv"});
  nn::ModelSpec m;
  m.kind = with_key(n, "kind", [&] { return nn::parse_model_kind(n.string("kind", "mlp")); });
  m.activation = with_key(n, "activation", [&] { return nn::parse_activation(n.string("activation", "relu")); });
  m.dropout_rate = n.number("dropout", 0.0);
  if (!(m.dropout_rate >= 0.0 && m.dropout_rate < 1.0)) n.fail("dropout", "must lie in [0, 1)");
  if (n.has("hidden")) {
    const Node h = n.at("hidden");
    if (!h.json().is_array()) h.fail("expected a list of widths");
    for (const auto& w : h.json()) m.hidden_widths.push_back(positive_int(Node(Json{{"w", w}}, h.path()), "w", 1));
  }
  if (n.has("conv")) {
    const Node c = n.at("conv");
    if (!c.json().is_array()) c.fail("expected a list of layers");
    for (std::size_t i = 0; i < c.json().size(); ++i) {
      const Node l(c.json()[i], c.path() + "[" + std::to_string(i) + "]");
      l.allow_only({"channels", "kernel", "stride"});
      m.conv.push_back({positive_int(l, "channels", 8), positive_int(l, "kernel", 3), positive_int(l, "stride", 1)});
    }
  }
  return m;
}

nn::TrainConfig parse_train(const Node& n) {
  n.allow_only({"epochs", "batch_size", "learning_rate", "momentum", "weight_decay", "optimizer", "scheduler",
                "grad_clip", "grad_noise", "label_noise"});
  nn::TrainConfig t;
  t.epochs = positive_int(n, "epochs", 10);
  t.batch_size = positive_int(n, "batch_size", 64);
  t.learning_rate = n.number("learning_rate", 0.01);
  t.momentum = n.number("momentum", 0.0);
  t.weight_decay = n.number("weight_decay", 0.0);
  t.optimizer = with_key(n, "optimizer", [&] { return nn::parse_optimizer(n.string("optimizer", "sgd")); });
  t.scheduler = with_key(n, "scheduler", [&] { return nn::parse_scheduler(n.string("scheduler", "cosine-annealing")); });
  if (n.has("grad_clip")) t.grad_clip_norm = positive(n, "grad_clip", 1.0);
  if (n.has("grad_noise")) t.grad_noise_sigma = n.number("grad_noise", 0.0);
  t.label_noise_rate = unit(n, "label_noise", 0.0);
  with_path(n, [&] {
    nn::validate(t);
    return 0;
  });
  return t;
}

DatasetConfig parse_dataset(const Node& n) {
  n.allow_only({"source", "samples", "dims", "classes", "separation", "path", "label_column", "images", "labels",
                "train", "val_fraction", "seed"});
  DatasetConfig d;
  d.source = n.string("source", "blobs");
  if (d.source == "blobs") {
    d.samples = static_cast<std::size_t>(positive_int(n, "samples", 10000));
    d.dims = positive_int(n, "dims", 100);
    d.classes = positive_int(n, "classes", 10);
    if (d.classes < 2) n.fail("classes", "must be >= 2");
    d.separation = positive(n, "separation", 2.5);
    for (const char* k : {"path", "images", "labels"}) {
      if (n.has(k)) n.fail(k, "not used by the blobs source");
    }
  } else if (d.source == "csv") {
    d.path = n.at("path").string();
    d.label_column = n.string("label_column", "label");
    if (!std::filesystem::exists(d.path)) n.fail("path", "file not found: " + d.path.string());
  } else if (d.source == "idx") {
    d.images = n.at("images").string();
    d.labels = n.at("labels").string();
    if (!std::filesystem::exists(d.images)) n.fail("images", "file not found: " + d.images.string());
    if (!std::filesystem::exists(d.labels)) n.fail("labels", "file not found: " + d.labels.string());
  } else {
    n.fail("source", "unknown source '" + d.source + "' (blobs, csv, idx)");
  }
  d.train = static_cast<std::size_t>(positive_int(n, "train", 5000));
  d.val_fraction = n.number("val_fraction", 0.4);
  if (!(d.val_fraction > 0.0 && d.val_fraction < 1.0)) n.fail("val_fraction", "must lie in (0, 1)");
  d.seed = seed_of(n, "seed", 1);
  return d;
}

poison::Kind kind_of(const Node& n, const std::string& key, const std::string& fallback) {
  return with_key(n, key, [&] { return poison::parse_kind(n.string(key, fallback)); });
}

void parse_poison(const Node& n, search::PipelineConfig& p) {
  n.allow_only({"kind", "coverage", "target", "variants"});
  p.kind = kind_of(n, "kind", "primitive");
  p.backdoor.coverage = unit(n, "coverage", 0.05);
  p.backdoor.target_label = static_cast<int>(n.integer("target", 0));
  if (n.has("variants")) {
    const Node v = n.at("variants");
    if (!v.json().is_array()) v.fail("expected a list");
    std::set<std::string> names;
    for (std::size_t i = 0; i < v.json().size(); ++i) {
      const Node e(v.json()[i], v.path() + "[" + std::to_string(i) + "]");
      e.allow_only({"name", "kind", "coverage"});
      search::VariantSpec s;
      s.kind = kind_of(e, "kind", "primitive");
      s.name = e.string("name", poison::to_string(s.kind));
      s.coverage = unit(e, "coverage", p.backdoor.coverage);
      if (s.name.empty() || s.name.find_first_of("/\\ ") != std::string::npos) e.fail("name", "must be a plain word");
      if (!names.insert(s.name).second) e.fail("name", "duplicate variant '" + s.name + "'");
      p.variants.push_back(s);
    }
  }
}

void parse_pipeline(const Node& n, search::PipelineConfig& p) {
  n.allow_only({"k", "alpha", "tradeoff", "stage1_trials", "stage2_trials", "asha", "asha_reduction",
                "asha_min_epochs", "stage1_point", "grid", "repeats", "method", "importance", "select"});
  p.k = positive(n, "k", 2.0);
  if (n.has("alpha") && n.has("tradeoff")) n.fail("alpha", "alpha and tradeoff are mutually exclusive");
  if (n.has("alpha")) {
    p.alpha = unit(n, "alpha", 1.0);
  } else if (n.has("tradeoff")) {
    const Node t = n.at("tradeoff");
    t.allow_only({"delta_main", "delta_backdoor"});
    p.alpha = with_path(t, [&] { return search::alpha_from_tradeoff(t.at("delta_main").number(), t.at("delta_backdoor").number()); });
  } else {
    n.fail("alpha", "set alpha or tradeoff {delta_main, delta_backdoor}");
  }
  p.stage1_trials = positive_int(n, "stage1_trials", 24);
  p.stage2_trials = positive_int(n, "stage2_trials", 60);
  p.asha = n.boolean("asha", false);
  p.asha_reduction = positive_int(n, "asha_reduction", 3);
  if (p.asha_reduction < 2) n.fail("asha_reduction", "must be >= 2");
  p.asha_min_epochs = positive_int(n, "asha_min_epochs", 1);
  if (n.has("stage1_point")) p.stage1_point = with_path(n.at("stage1_point"), [&] { return search::point_from_json(n.json().at("stage1_point")); });
  p.grid = parse_grid(n.at("grid"));
  p.repeats = positive_int(n, "repeats", 1);
  const std::string method = n.string("method", "midpoint");
  if (method == "midpoint") p.method = resistance::Method::midpoint;
  else if (method == "inflection") p.method = resistance::Method::inflection;
  else n.fail("method", "expected midpoint or inflection");
  p.importance = n.boolean("importance", true);
  if (n.has("select")) p.select_trial = static_cast<int>(n.integer("select", 0));
}

FedSection parse_federated(const Node& n, const nn::TrainConfig& local, std::uint64_t seed) {
  n.allow_only({"num_users", "rounds", "round_size", "local_epochs", "global_lr", "clip_bound", "noise_sigma",
                "user_poison_rate", "grid", "repeats"});
  FedSection f;
  fed::FedConfig& c = f.config;
  c.num_users = positive_int(n, "num_users", 100);
  c.rounds = positive_int(n, "rounds", 20);
  c.round_size = positive_int(n, "round_size", 10);
  c.local_epochs = positive_int(n, "local_epochs", 1);
  c.global_lr = n.number("global_lr", 1.0);
  if (n.has("clip_bound")) c.clip_bound = positive(n, "clip_bound", 1.0);
  c.noise_sigma = n.number("noise_sigma", 0.0);
  c.user_poison_rate = unit(n, "user_poison_rate", 1.0);
  c.local = local;
  c.local.seed = derive_seed(seed, "fed-local");
  c.seed = derive_seed(seed, "fed");
  with_path(n, [&] {
    fed::validate(c);
    return 0;
  });
  f.fractions = parse_grid(n.at("grid"));
  f.repeats = positive_int(n, "repeats", 1);
  return f;
}

}  // namespace

std::vector<std::string> profile_names() { return {"desk", "full", "fed-500", "fed-100"}; }

Json profile(const std::string& name) {
  Json p = desk_profile();
  if (name == "desk") return p;
  if (name == "full") {
    p["pipeline"]["stage1_trials"] = 99;
    p["pipeline"]["stage2_trials"] = 360;
    p["pipeline"]["grid"] = {{"min", 1e-5}, {"max", 1e-2}, {"points", 27}};
    return p;
  }
  if (name == "fed-500") {
    p["dataset"]["samples"] = 15000;
    p["dataset"]["train"] = 10000;
    p["federated"] = federated_section(500, 0.002);
    return p;
  }
  if (name == "fed-100") {
    p["federated"] = federated_section(100, 0.01);
    return p;
  }
  throw ConfigError("config: profile: unknown profile '" + name + "'");
}

RunConfig parse_config(const Json& doc) {
  const Node root(doc, "");
  root.require_object();
  RunConfig rc;
  rc.profile = root.string("profile", "desk");
  Json merged = profile(rc.profile);
  Json patch = doc;
  patch.erase("profile");
  merged.merge_patch(patch);
  merged["profile"] = rc.profile;
  rc.resolved = merged;
  rc.hash = search::config_hash(merged);

  const Node n(rc.resolved, "");
  n.allow_only({"profile", "seed", "output_dir", "dataset", "model", "train", "stage1_space", "space", "poison",
                "pipeline", "federated"});
  const std::uint64_t seed = seed_of(n, "seed", 1);
  rc.output_dir = n.string("output_dir", "results");
  rc.dataset = parse_dataset(n.at("dataset"));
  search::PipelineConfig& p = rc.pipeline;
  p.seed = seed;
  p.model = parse_model(n.at("model"));
  p.base = parse_train(n.at("train"));
  p.stage1_space = parse_space(n.at("stage1_space"));
  p.space = parse_space(n.at("space"));
  parse_poison(n.at("poison"), p);
  parse_pipeline(n.at("pipeline"), p);
  if (n.has("federated")) rc.federated = parse_federated(n.at("federated"), p.base, seed);
  return rc;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read '" + path.string() + "'");
  Json doc = Json::parse(in, nullptr, false, true);
  if (doc.is_discarded()) throw ConfigError("config: '" + path.string() + "' is not valid JSON");
  return parse_config(doc);
}

data::DataSplits load_data(RunConfig& cfg) {
  const DatasetConfig& d = cfg.dataset;
  data::Dataset pool;
  if (d.source == "blobs") {
    pool = data::synth_blobs(d.samples, d.classes, static_cast<std::size_t>(d.dims), d.separation, d.seed);
  } else if (d.source == "csv") {
    pool = data::load_csv(d.path, d.label_column).dataset;
  } else {
    pool = data::load_idx(d.images, d.labels);
  }
  if (d.train >= pool.size()) {
    throw ConfigError("config: dataset.train: " + std::to_string(d.train) + " leaves no rows for val/test (pool has " +
                      std::to_string(pool.size()) + ")");
  }
  std::vector<std::size_t> train_idx, rest_idx;
  for (std::size_t i = 0; i < pool.size(); ++i) (i < d.train ? train_idx : rest_idx).push_back(i);
  data::DataSplits s;
  s.train = pool.subset(train_idx);
  auto split = data::split_holdout(pool.subset(rest_idx), d.val_fraction, derive_seed(d.seed, "holdout"));
  s.val = std::move(split.val);
  s.test = std::move(split.test);

  nn::ModelSpec& m = cfg.pipeline.model;
  m.num_classes = pool.num_classes();
  if (m.kind == nn::ModelKind::conv2) {
    if (pool.dims().size() != 3) throw ConfigError("config: model.kind: conv2 needs image data with H x W x C dims");
    m.input_dims = pool.dims();
  } else {
    m.input_dims = {static_cast<int>(pool.input_len())};
  }
  return s;
}

}  // namespace natres::cli
