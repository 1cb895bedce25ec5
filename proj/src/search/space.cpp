// Copyright 2026 The natres Authors
// SPDX-License-Identifier: Apache-2.0

#include "natres/search/space.hpp"

#include <cmath>
#include <set>

#include "natres/csv.hpp"
#include "natres/error.hpp"
#include "natres/rng.hpp"

namespace natres::search {

std::string to_string(DomainKind k) {
  switch (k) {
    case DomainKind::categorical: return "categorical";
    case DomainKind::int_set: return "int_set";
    case DomainKind::linear_interval: return "interval";
    case DomainKind::log_interval: return "log_interval";
  }
  return "interval";
}

DomainKind parse_domain_kind(const std::string& s) {
  if (s == "categorical") return DomainKind::categorical;
  if (s == "int_set") return DomainKind::int_set;
  if (s == "interval") return DomainKind::linear_interval;
  if (s == "log_interval") return DomainKind::log_interval;
  throw InvalidArgument("unknown domain kind '" + s + "'");
}

ParamDomain ParamDomain::categorical(std::string name, std::vector<std::string> values) {
  ParamDomain d;
  d.name = std::move(name);
  d.kind = DomainKind::categorical;
  d.categories = std::move(values);
  return d;
}

ParamDomain ParamDomain::int_set(std::string name, std::vector<std::int64_t> values) {
  ParamDomain d;
  d.name = std::move(name);
  d.kind = DomainKind::int_set;
  d.ints = std::move(values);
  return d;
}

ParamDomain ParamDomain::linear(std::string name, double lo, double hi) {
  ParamDomain d;
  d.name = std::move(name);
  d.kind = DomainKind::linear_interval;
  d.lo = lo;
  d.hi = hi;
  return d;
}

ParamDomain ParamDomain::log(std::string name, double lo, double hi) {
  ParamDomain d = linear(std::move(name), lo, hi);
  d.kind = DomainKind::log_interval;
  return d;
}

void ParamDomain::validate() const {
  const std::string where = "domain '" + name + "': ";
  if (name.empty()) throw InvalidArgument("domain without a name");
  switch (kind) {
    case DomainKind::categorical:
      if (categories.empty()) throw InvalidArgument(where + "no values");
      break;
    case DomainKind::int_set:
      if (ints.empty()) throw InvalidArgument(where + "no values");
      break;
    case DomainKind::log_interval:
      if (!(lo > 0.0)) throw InvalidArgument(where + "log interval needs lo > 0");
      [[fallthrough]];
    case DomainKind::linear_interval:
      if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw InvalidArgument(where + "need finite lo < hi");
      }
      break;
  }
}

std::string format_value(const ParamValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return csv::format_double(*d);
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  return std::get<std::string>(v);
}

SearchSpace::SearchSpace(std::vector<ParamDomain> domains) {
  for (auto& d : domains) add(std::move(d));
}

void SearchSpace::add(ParamDomain d) {
  d.validate();
  if (!is_known_param(d.name)) throw InvalidArgument("domain '" + d.name + "' maps to no known parameter");
  if (find(d.name) != nullptr) throw InvalidArgument("duplicate domain '" + d.name + "'");
  domains_.push_back(std::move(d));
}

const ParamDomain* SearchSpace::find(const std::string& name) const {
  for (const auto& d : domains_) {
    if (d.name == name) return &d;
  }
  return nullptr;
}

SearchSpace generic_space() {
  return SearchSpace({
      ParamDomain::int_set("batch_size", {16, 32, 64, 128, 256}),
      ParamDomain::log("weight_decay", 1e-7, 1e-3),
      ParamDomain::log("learning_rate", 1e-5, 2.0),
      ParamDomain::linear("momentum", 0.1, 0.9),
      ParamDomain::categorical("optimizer", {"sgd", "adam", "adadelta"}),
      ParamDomain::categorical("scheduler", {"step-decay", "multi-step-decay", "cosine-annealing"}),
  });
}

SearchSpace default_space() {
  SearchSpace s = generic_space();
  s.add(ParamDomain::linear("grad_clip", 1.0, 10.0));
  s.add(ParamDomain::log("grad_noise", 1e-5, 1e-1));
  s.add(ParamDomain::linear("label_noise", 0.0, 0.9));
  return s;
}

HyperPoint sample_point(const SearchSpace& space, std::uint64_t seed) {
  HyperPoint p;
  for (const auto& d : space.domains()) {
    // One stream per name so adding a domain leaves the others unchanged.
    Rng rng(derive_seed(seed, d.name));
    switch (d.kind) {
      case DomainKind::categorical: p[d.name] = d.categories[rng.index(d.categories.size())]; break;
      case DomainKind::int_set: p[d.name] = d.ints[rng.index(d.ints.size())]; break;
      case DomainKind::linear_interval: p[d.name] = rng.uniform(d.lo, d.hi); break;
      case DomainKind::log_interval:
        p[d.name] = std::pow(10.0, rng.uniform(std::log10(d.lo), std::log10(d.hi)));
        break;
    }
  }
  return p;
}

namespace {

constexpr const char* kKnown[] = {
    "batch_size",   "weight_decay", "learning_rate",  "momentum",       "optimizer",
    "scheduler",    "grad_clip",    "grad_noise",     "label_noise",    "epochs",
    "dropout",      "activation",   "hidden_width",   "conv1_channels", "conv2_channels",
    "conv_kernel",  "round_size",   "local_epochs",   "global_lr",      "clip_bound",
    "noise_sigma",
};

double as_double(const std::string& name, const ParamValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  throw InvalidArgument("parameter '" + name + "' expects a number");
}

int as_int(const std::string& name, const ParamValue& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<int>(*i);
  if (const auto* d = std::get_if<double>(&v)) {
    if (*d == std::round(*d)) return static_cast<int>(*d);
  }
  throw InvalidArgument("parameter '" + name + "' expects an integer");
}

const std::string& as_string(const std::string& name, const ParamValue& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  throw InvalidArgument("parameter '" + name + "' expects a string");
}

}  // namespace

bool is_known_param(const std::string& name) {
  for (const char* k : kKnown) {
    if (name == k) return true;
  }
  return false;
}

void apply_point(const HyperPoint& point, nn::TrainConfig& cfg, nn::ModelSpec& model,
                 fed::FedConfig* fed) {
  for (const auto& [name, value] : point) {
    if (name == "batch_size") cfg.batch_size = as_int(name, value);
    else if (name == "weight_decay") cfg.weight_decay = as_double(name, value);
    else if (name == "learning_rate") cfg.learning_rate = as_double(name, value);
    else if (name == "momentum") cfg.momentum = as_double(name, value);
    else if (name == "optimizer") cfg.optimizer = nn::parse_optimizer(as_string(name, value));
    else if (name == "scheduler") cfg.scheduler = nn::parse_scheduler(as_string(name, value));
    else if (name == "grad_clip") cfg.grad_clip_norm = as_double(name, value);
    else if (name == "grad_noise") cfg.grad_noise_sigma = as_double(name, value);
    else if (name == "label_noise") cfg.label_noise_rate = as_double(name, value);
    else if (name == "epochs") cfg.epochs = as_int(name, value);
    else if (name == "dropout") model.dropout_rate = as_double(name, value);
    else if (name == "activation") model.activation = nn::parse_activation(as_string(name, value));
    else if (name == "hidden_width") {
      if (model.hidden_widths.empty()) throw InvalidArgument("hidden_width set on a model without hidden layers");
      for (int& w : model.hidden_widths) w = as_int(name, value);
    } else if (name == "conv1_channels" || name == "conv2_channels" || name == "conv_kernel") {
      if (model.kind != nn::ModelKind::conv2 || model.conv.size() != 2) {
        throw InvalidArgument("parameter '" + name + "' needs a conv2 model");
      }
      if (name == "conv1_channels") model.conv[0].channels = as_int(name, value);
      else if (name == "conv2_channels") model.conv[1].channels = as_int(name, value);
      else for (auto& c : model.conv) c.kernel = as_int(name, value);
    } else if (name == "round_size" || name == "local_epochs" || name == "global_lr" ||
               name == "clip_bound" || name == "noise_sigma") {
      if (fed == nullptr) throw InvalidArgument("parameter '" + name + "' applies to federated runs only");
      if (name == "round_size") fed->round_size = as_int(name, value);
      else if (name == "local_epochs") fed->local_epochs = as_int(name, value);
      else if (name == "global_lr") fed->global_lr = as_double(name, value);
      else if (name == "clip_bound") fed->clip_bound = as_double(name, value);
      else fed->noise_sigma = as_double(name, value);
    } else {
      throw InvalidArgument("unknown hyperparameter '" + name + "'");
    }
  }
}

}  // namespace natres::search
