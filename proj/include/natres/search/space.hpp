// Copyright 2026 The natres Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "natres/fed/fedavg.hpp"
#include "natres/nn/model.hpp"
#include "natres/nn/train.hpp"

namespace natres::search {

enum class DomainKind { categorical, int_set, linear_interval, log_interval };

std::string to_string(DomainKind k);
DomainKind parse_domain_kind(const std::string& s);

struct ParamDomain {
  std::string name;
  DomainKind kind = DomainKind::linear_interval;
  std::vector<std::string> categories;  // categorical
  std::vector<std::int64_t> ints;       // int_set
  double lo = 0.0;                      // intervals
  double hi = 0.0;

  static ParamDomain categorical(std::string name, std::vector<std::string> values);
  static ParamDomain int_set(std::string name, std::vector<std::int64_t> values);
  static ParamDomain linear(std::string name, double lo, double hi);
  static ParamDomain log(std::string name, double lo, double hi);

  void validate() const;
};

using ParamValue = std::variant<double, std::int64_t, std::string>;
// Parameter name -> value; ordered so serialization is stable.
using HyperPoint = std::map<std::string, ParamValue>;

std::string format_value(const ParamValue& v);

class SearchSpace {
 public:
  SearchSpace() = default;
  explicit SearchSpace(std::vector<ParamDomain> domains);

  void add(ParamDomain d);
  const std::vector<ParamDomain>& domains() const { return domains_; }
  const ParamDomain* find(const std::string& name) const;
  bool empty() const { return domains_.empty(); }

 private:
  std::vector<ParamDomain> domains_;
};

// Standard training knobs only: batch size, decay, learning rate, momentum,
// optimizer, scheduler. The default for the clean first stage.
SearchSpace generic_space();

// generic_space() plus the cheap regularizers: gradient clip, gradient noise,
// label noise.
SearchSpace default_space();

// Uniform per domain; log intervals are uniform in log10.
HyperPoint sample_point(const SearchSpace& space, std::uint64_t seed);

// Every name a point may carry, with the value kind it expects.
bool is_known_param(const std::string& name);

// Writes the point into the consumer structs. Names that target a struct
// not supplied (fed == nullptr) are an error, as are unknown names and
// values of the wrong kind.
void apply_point(const HyperPoint& point, nn::TrainConfig& cfg, nn::ModelSpec& model,
                 fed::FedConfig* fed = nullptr);

}  // namespace natres::search
