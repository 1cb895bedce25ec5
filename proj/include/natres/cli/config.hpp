// Copyright 2026 The natres Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "natres/data/dataset.hpp"
#include "natres/error.hpp"
#include "natres/fed/fedavg.hpp"
#include "natres/search/pipeline.hpp"

namespace natres::cli {

using Json = nlohmann::json;

// Malformed config; the message starts with the offending key path.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

struct DatasetConfig {
  std::string source = "blobs";  // blobs | csv | idx
  // blobs
  std::size_t samples = 10000;
  int dims = 100;
  int classes = 10;
  double separation = 2.5;
  // csv / idx
  std::filesystem::path path;
  std::string label_column = "label";
  std::filesystem::path images;
  std::filesystem::path labels;
  // The first `train` rows train; the rest split into val / test.
  std::size_t train = 5000;
  double val_fraction = 0.4;
  std::uint64_t seed = 1;
};

struct FedSection {
  fed::FedConfig config;
  std::vector<double> fractions;  // user-fraction grid, starts at 0
  int repeats = 1;
};

struct RunConfig {
  Json resolved;  // profile merged with the file; hashed into provenance
  std::string hash;
  std::string profile;
  DatasetConfig dataset;
  search::PipelineConfig pipeline;  // input dims and classes filled by load_data
  std::optional<FedSection> federated;
  std::filesystem::path output_dir = "results";
};

std::vector<std::string> profile_names();
// Throws ConfigError for an unknown name.
Json profile(const std::string& name);

// Applies the named "profile" (default "desk") under the document, then
// validates every key. Unknown keys are errors so typos surface early.
RunConfig parse_config(const Json& doc);
RunConfig load_config(const std::filesystem::path& path);

// Splits per the dataset section and fixes model input dims and classes.
data::DataSplits load_data(RunConfig& cfg);

}  // namespace natres::cli
