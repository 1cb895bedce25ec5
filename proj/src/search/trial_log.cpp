// Copyright 2026 The natres Authors
// SPDX-License-Identifier: Apache-2.0

#include "natres/search/trial_log.hpp"

#include <cstdio>
#include <fstream>

#include "natres/csv.hpp"
#include "natres/error.hpp"

namespace natres::search {

TrialLog::TrialLog(std::filesystem::path path) : path_(std::move(path)) {
  if (!std::filesystem::exists(path_)) return;
  std::ifstream in(path_, std::ios::binary);
  if (!in) throw DataError("cannot read trial log " + path_.string());
  std::string line;
  std::uintmax_t good_bytes = 0;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const bool terminated = !in.eof();
    if (line.empty()) {
      good_bytes += 1;
      continue;
    }
    Json rec = Json::parse(line, nullptr, false);
    if (rec.is_discarded() || !terminated) {
      // Only the last line may be torn by a kill; anything earlier is damage.
      if (in.peek() != std::char_traits<char>::eof() && terminated) {
        throw DataError(path_.string() + ": line " + std::to_string(line_no) + " is not valid JSON");
      }
      break;
    }
    good_bytes += line.size() + 1;
    if (rec.value("type", "") == "header") {
      header_ = rec;
    } else if (rec.contains("key") && rec["key"].is_string()) {
      records_[rec["key"].get<std::string>()] = rec;
      ++replayed_;
    } else {
      throw DataError(path_.string() + ": line " + std::to_string(line_no) + " has no key");
    }
  }
  in.close();
  if (good_bytes < std::filesystem::file_size(path_)) std::filesystem::resize_file(path_, good_bytes);
}

void TrialLog::append_line(const Json& line) {
  if (path_.empty()) return;
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  if (!out) throw DataError("cannot append to trial log " + path_.string());
  out << line.dump() << '\n';
  out.flush();
  if (!out) throw DataError("write failed on trial log " + path_.string());
}

void TrialLog::ensure_header(const Json& config, const std::string& hash) {
  std::lock_guard lock(mu_);
  if (header_) {
    if (header_->value("config_hash", "") != hash) {
      throw InvalidArgument("trial log " + path_.string() + " belongs to a different config (hash " +
                            header_->value("config_hash", "?") + ", expected " + hash + ")");
    }
    return;
  }
  if (!records_.empty()) throw DataError("trial log " + path_.string() + " has records but no header");
  Json h{{"type", "header"}, {"config_hash", hash}, {"config", config}};
  append_line(h);
  header_ = std::move(h);
}

std::optional<Json> TrialLog::header() const {
  std::lock_guard lock(mu_);
  return header_;
}

std::optional<Json> TrialLog::find(const std::string& key) const {
  std::lock_guard lock(mu_);
  const auto it = records_.find(key);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

void TrialLog::put(const std::string& key, Json record) {
  record["key"] = key;
  std::lock_guard lock(mu_);
  append_line(record);
  records_[key] = std::move(record);
}

std::size_t TrialLog::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

Json TrialLog::memo(const std::string& key, const std::function<Json()>& compute) {
  if (auto hit = find(key)) return *hit;
  Json rec = compute();
  put(key, rec);
  rec["key"] = key;
  return rec;
}

Json to_json(const ParamValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  return std::get<std::string>(v);
}

ParamValue param_from_json(const Json& j) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw DataError("hyperparameter value must be a number or string, got " + j.dump());
}

Json to_json(const HyperPoint& p) {
  Json j = Json::object();
  for (const auto& [k, v] : p) j[k] = to_json(v);
  return j;
}

HyperPoint point_from_json(const Json& j) {
  if (!j.is_object()) throw DataError("hyperparameter point must be an object");
  HyperPoint p;
  for (const auto& [k, v] : j.items()) p[k] = param_from_json(v);
  return p;
}

Json to_json(const TrialResult& r) {
  Json j{{"type", "trial"},
         {"trial_id", r.trial_id},
         {"point", to_json(r.point)},
         {"main_acc", r.main_acc},
         {"backdoor_acc", r.backdoor_acc},
         {"seed", r.seed},
         {"resource", r.resource},
         {"status", to_string(r.status)}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

TrialResult trial_from_json(const Json& j) {
  try {
    TrialResult r;
    r.trial_id = j.at("trial_id").get<int>();
    r.point = point_from_json(j.at("point"));
    r.main_acc = j.at("main_acc").get<double>();
    r.backdoor_acc = j.at("backdoor_acc").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.resource = j.at("resource").get<int>();
    r.status = parse_trial_status(j.at("status").get<std::string>());
    r.error = j.value("error", "");
    return r;
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed trial record: ") + e.what());
  }
}

resistance::PointFn logged_point_fn(TrialLog& log, std::string prefix, resistance::PointFn fn) {
  return [&log, prefix = std::move(prefix), fn = std::move(fn)](double p, std::uint64_t seed) {
    const std::string key = prefix + "/p/" + csv::format_double(p) + "/seed/" + std::to_string(seed);
    const Json rec = log.memo(key, [&] {
      try {
        const auto m = fn(p, seed);
        return Json{{"type", "point"}, {"backdoor_acc", m.backdoor_acc}, {"main_acc", m.main_acc}};
      } catch (const NumericError& e) {
        return Json{{"type", "point"}, {"failed", true}, {"error", e.what()}, {"step", e.step()}};
      }
    });
    if (rec.value("failed", false)) throw NumericError(rec.value("error", "replayed failure"), rec.value("step", -1));
    return resistance::PointMetrics{rec.at("backdoor_acc").get<double>(), rec.at("main_acc").get<double>()};
  };
}

std::string config_hash(const Json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace natres::search
