// Copyright 2026 The natres Authors
// SPDX-License-Identifier: Apache-2.0

#include "natres/cli/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "natres/cli/config.hpp"
#include "natres/cli/report.hpp"
#include "natres/rng.hpp"

namespace natres::cli {

namespace {

struct Common {
  std::string config;
  std::string profile;
  std::string out;
  int workers = 0;
};

void add_common(CLI::App* sub, Common& c) {
  auto* cfg = sub->add_option("--config", c.config, "JSON config file")->check(CLI::ExistingFile);
  sub->add_option("--profile", c.profile, "built-in profile when no config file is given")->excludes(cfg);
  sub->add_option("--out", c.out, "output directory (overrides NATRES_OUT and output_dir)");
  sub->add_option("--workers", c.workers, "worker threads (default: hardware threads)")->check(CLI::NonNegativeNumber);
}

int workers_of(const Common& c) {
  if (c.workers > 0) return c.workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

RunConfig resolve(const Common& c) {
  if (!c.config.empty()) return load_config(c.config);
  Json doc = Json::object();
  if (!c.profile.empty()) doc["profile"] = c.profile;
  return parse_config(doc);
}

std::filesystem::path out_dir(const Common& c, const RunConfig& cfg) {
  if (!c.out.empty()) return c.out;
  if (const char* env = std::getenv("NATRES_OUT"); env != nullptr && *env != '\0') return env;
  return cfg.output_dir;
}

std::string show_point(const search::HyperPoint& p) { return search::to_json(p).dump(); }

std::string show_p(const resistance::ResistancePoint& p) {
  std::ostringstream s;
  if (p.measured()) s << p.p;
  else s << resistance::to_string(p.status) << " (probed up to " << p.p << ")";
  return s.str();
}

void print_summary(std::ostream& out, const search::PipelineReport& rep) {
  out << "status: " << search::to_string(rep.status) << '\n';
  if (!rep.message.empty()) out << "note: " << rep.message << '\n';
  out << "lambda: " << show_point(rep.lambda) << '\n';
  out << "sanity attempts: " << rep.sanity.attempts << '\n';
  out << "audit 1 resistance point: " << show_p(rep.audit1.point) << '\n';
  if (rep.stage2.trials.empty()) return;
  out << "p*: " << rep.p_star << "  alpha: " << rep.alpha << '\n';
  out << "selected trial: " << rep.selected_trial << " of " << rep.stage2.trials.size() << " (frontier size "
      << rep.frontier.size() << ")\n";
  out << "lambda_R: " << show_point(rep.lambda_r) << '\n';
  out << "main accuracy:    " << accuracy_row(rep.main_base(), rep.main_resistant()) << '\n';
  out << "resistance point: " << resistance_row(rep.audit2_base.point, rep.audit2_resistant.point) << '\n';
  for (const auto& v : rep.variants) {
    out << "  " << v.spec.name << ": "
        << (v.error.empty() ? resistance_row(v.base.point, v.resistant.point) : "skipped, " + v.error) << '\n';
  }
}

int status_code(const search::PipelineReport& rep) {
  return rep.status == search::PipelineStatus::ok ? kExitOk : kExitNoResult;
}

int run_pipeline_cmd(RunConfig cfg, const std::filesystem::path& dir, int workers, std::optional<int> select,
                     bool audit_only, std::ostream& out) {
  data::DataSplits splits = load_data(cfg);
  if (select) cfg.pipeline.select_trial = select;
  cfg.pipeline.audit_only = audit_only;
  std::filesystem::create_directories(dir);
  search::TrialLog log(dir / "trials.jsonl");
  log.ensure_header(cfg.resolved, cfg.hash);
  const std::size_t before = log.size();
  const auto rep = search::run_pipeline(cfg.pipeline, {&splits.train, &splits.val, &splits.test}, log, workers);
  write_outputs(dir, rep, cfg, utc_timestamp());
  print_summary(out, rep);
  out << "log: " << log.path().string() << " (" << log.replayed() << " replayed, " << log.size() - before
      << " new)\n";
  out << "wrote " << (dir / "report.json").string() << '\n';
  return status_code(rep);
}

int run_fed_audit(RunConfig cfg, const std::filesystem::path& dir, int workers, std::ostream& out) {
  if (!cfg.federated) throw ConfigError("config: federated: missing (use a fed-* profile or add the section)");
  data::DataSplits splits = load_data(cfg);
  const FedSection& f = *cfg.federated;
  const search::PipelineConfig& p = cfg.pipeline;
  const auto shards = data::shard_users(splits.train, f.config.num_users, derive_seed(p.seed, "shards"));
  poison::BackdoorParams bp = p.backdoor;
  bp.fraction = 1.0;
  const auto spec = poison::make_backdoor(p.kind, splits.train, bp, derive_seed(p.seed, "trigger"));
  const auto curve = fed::fed_resistance_curve(f.config, p.model, {&splits.train, shards.shards, &splits.test}, spec,
                                               f.fractions, f.repeats, derive_seed(p.seed, "fed-audit"), workers);
  const auto point = resistance::resistance_point(curve, {p.method, std::nullopt, std::nullopt});

  std::filesystem::create_directories(dir / "curves");
  resistance::write_curve_csv(dir / "curves" / "fed.csv", curve);
  Json j{{"tool", "natres"},
         {"version", kToolVersion},
         {"generated_at", utc_timestamp()},
         {"config_hash", cfg.hash},
         {"profile", cfg.profile},
         {"seed", p.seed},
         {"num_users", f.config.num_users},
         {"status", resistance::to_string(point.status)},
         {"fraction", point.p},
         {"users", point.measured() ? Json(point.p * f.config.num_users) : Json(nullptr)},
         {"a_min", point.a_min},
         {"a_max", point.a_max},
         {"threshold", point.threshold}};
  std::ofstream(dir / "fed_report.json") << j.dump(2) << '\n';

  out << "federated resistance point: " << show_p(point);
  if (point.measured()) out << " of users (" << point.p * f.config.num_users << " users)";
  out << '\n' << "wrote " << (dir / "fed_report.json").string() << '\n';
  return point.measured() ? kExitOk : kExitNoResult;
}

}  // namespace

int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"natres: audit a training pipeline's natural resistance to backdoor poisoning"};
  app.require_subcommand(1);

  Common c;
  std::optional<int> select;

  auto* show = app.add_subcommand("config", "print the resolved config");
  add_common(show, c);
  auto* audit = app.add_subcommand("audit", "Stage 1 and Audit 1 only");
  add_common(audit, c);
  auto* pipe = app.add_subcommand("pipeline", "both searches and both audits");
  add_common(pipe, c);
  pipe->add_option("--select", select, "Stage-2 trial id to use instead of the joint-score argmax");
  auto* report = app.add_subcommand("report", "rebuild the outputs of a run from its trial log");
  std::string report_dir;
  int report_workers = 0;
  report->add_option("--out", report_dir, "directory of a previous run")->required()->check(CLI::ExistingDirectory);
  report->add_option("--select", select, "Stage-2 trial id; audits of a new pick are trained and logged");
  report->add_option("--workers", report_workers, "worker threads")->check(CLI::NonNegativeNumber);
  auto* fed = app.add_subcommand("fed-audit", "federated poisoning curve over the share of compromised users");
  add_common(fed, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (show->parsed()) {
      out << resolve(c).resolved.dump(2) << '\n';
      return kExitOk;
    }
    if (audit->parsed()) {
      const RunConfig cfg = resolve(c);
      return run_pipeline_cmd(cfg, out_dir(c, cfg), workers_of(c), std::nullopt, true, out);
    }
    if (pipe->parsed()) {
      const RunConfig cfg = resolve(c);
      return run_pipeline_cmd(cfg, out_dir(c, cfg), workers_of(c), select, false, out);
    }
    if (report->parsed()) {
      const std::filesystem::path dir = report_dir;
      const search::TrialLog peek(dir / "trials.jsonl");
      const auto header = peek.header();
      if (!header) throw DataError("'" + (dir / "trials.jsonl").string() + "': no header record");
      const RunConfig cfg = parse_config(header->at("config"));
      Common w;
      w.workers = report_workers;
      return run_pipeline_cmd(cfg, dir, workers_of(w), select, false, out);
    }
    if (fed->parsed()) {
      const RunConfig cfg = resolve(c);
      return run_fed_audit(cfg, out_dir(c, cfg), workers_of(c), out);
    }
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace natres::cli
