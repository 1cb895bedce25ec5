// Copyright 2026 The natres Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "json.hpp"
#include "natres/resistance/resistance.hpp"
#include "natres/search/trials.hpp"

namespace natres::search {

using Json = nlohmann::json;

// Append-only JSON Lines store keyed by stable record names such as
// "stage2/trial/7/rung/0". Opening an existing file replays it, so a killed
// run resumes by skipping every record already present. A torn final line is
// dropped. Without a path the log lives in memory only. Thread-safe.
class TrialLog {
 public:
  TrialLog() = default;
  explicit TrialLog(std::filesystem::path path);

  // The first record of a file. Reopening with a different config hash is an
  // error: replaying records of another run would corrupt the report.
  void ensure_header(const Json& config, const std::string& config_hash);
  std::optional<Json> header() const;

  std::optional<Json> find(const std::string& key) const;
  void put(const std::string& key, Json record);

  std::size_t size() const;
  std::size_t replayed() const { return replayed_; }
  const std::filesystem::path& path() const { return path_; }

  // Returns the cached record for key, or computes, stores and returns it.
  Json memo(const std::string& key, const std::function<Json()>& compute);

 private:
  void append_line(const Json& line);

  std::filesystem::path path_;
  std::map<std::string, Json> records_;
  std::optional<Json> header_;
  std::size_t replayed_ = 0;
  mutable std::mutex mu_;
};

Json to_json(const ParamValue& v);
ParamValue param_from_json(const Json& j);
Json to_json(const HyperPoint& p);
HyperPoint point_from_json(const Json& j);
Json to_json(const TrialResult& r);
TrialResult trial_from_json(const Json& j);

// Wraps a curve point function so every (p, seed) evaluation is served from
// or recorded in the log under "<prefix>/p/<p>/seed/<seed>". Failed
// evaluations replay as the same NumericError.
resistance::PointFn logged_point_fn(TrialLog& log, std::string prefix, resistance::PointFn fn);

// FNV-1a over the compact dump, as 16 hex digits.
std::string config_hash(const Json& config);

}  // namespace natres::search
