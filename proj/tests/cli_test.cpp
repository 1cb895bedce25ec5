// Copyright 2026 The natres Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "natres/cli/commands.hpp"
#include "natres/cli/config.hpp"
#include "natres/cli/report.hpp"
#include "natres/resistance/resistance.hpp"

namespace fs = std::filesystem;
using namespace natres;
using natres::cli::Json;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("natres_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Small enough to run a full pipeline in about a second.
Json small_config() {
  return Json::parse(R"({
    "dataset": {"samples": 3000, "dims": 20, "train": 1500},
    "train": {"epochs": 4},
    "poison": {"variants": [{"name": "single-pixel", "kind": "single-pixel"}]},
    "pipeline": {"stage1_trials": 4, "stage2_trials": 6, "grid": {"min": 1e-3, "max": 0.3, "points": 7}}
  })");
}

fs::path write_config(const fs::path& dir, const Json& doc) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << doc.dump(2);
  return p;
}

struct CmdResult {
  int code;
  std::string out;
  std::string err;
};

CmdResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "natres");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_command(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t count_lines(const fs::path& p) {
  const std::string s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

Json report_without_time(const fs::path& dir) {
  Json j = Json::parse(slurp(dir / "report.json"));
  j.erase("generated_at");
  return j;
}

std::string config_error(const Json& doc) {
  try {
    cli::parse_config(doc);
  } catch (const cli::ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(ConfigTest, DeskProfileDefaults) {
  const cli::RunConfig cfg = cli::parse_config(Json::object());
  EXPECT_EQ(cfg.profile, "desk");
  EXPECT_NEAR(cfg.pipeline.alpha, 100.0 / 105.0, 1e-12);
  ASSERT_EQ(cfg.pipeline.grid.size(), 14u);  // p = 0 plus 13 rates
  EXPECT_EQ(cfg.pipeline.grid.front(), 0.0);
  EXPECT_NEAR(cfg.pipeline.grid[1], 1e-4, 1e-16);
  EXPECT_NEAR(cfg.pipeline.grid.back(), 0.1, 1e-14);
  EXPECT_EQ(cfg.pipeline.stage1_space.domains().size(), 6u);
  EXPECT_EQ(cfg.pipeline.space.domains().size(), 9u);
  EXPECT_EQ(cfg.pipeline.variants.size(), 5u);
  EXPECT_FALSE(cfg.federated.has_value());
  EXPECT_EQ(cfg.hash.size(), 16u);
}

TEST(ConfigTest, ProfilesResolve) {
  for (const auto& name : cli::profile_names()) {
    const auto cfg = cli::parse_config(Json{{"profile", name}});
    EXPECT_EQ(cfg.profile, name);
  }
  const auto full = cli::parse_config(Json{{"profile", "full"}});
  EXPECT_EQ(full.pipeline.stage1_trials, 99);
  EXPECT_EQ(full.pipeline.stage2_trials, 360);
  EXPECT_EQ(full.pipeline.grid.size(), 28u);
  const auto fed = cli::parse_config(Json{{"profile", "fed-500"}});
  ASSERT_TRUE(fed.federated.has_value());
  EXPECT_EQ(fed.federated->config.num_users, 500);
  EXPECT_NE(fed.federated->config.seed, fed.federated->config.local.seed);
}

TEST(ConfigTest, HashFollowsResolvedContent) {
  const auto a = cli::parse_config(Json::object());
  const auto b = cli::parse_config(Json{{"profile", "desk"}});
  const auto c = cli::parse_config(Json{{"seed", 2}});
  EXPECT_EQ(a.hash, b.hash);
  EXPECT_NE(a.hash, c.hash);
  // Re-parsing the resolved document is a fixed point, which `report` relies on.
  EXPECT_EQ(cli::parse_config(c.resolved).hash, c.hash);
}

TEST(ConfigTest, OverridesMergeIntoProfile) {
  const auto cfg = cli::parse_config(Json::parse(R"({"pipeline": {"alpha": 0.5, "tradeoff": null}, "train": {"epochs": 3}})"));
  EXPECT_EQ(cfg.pipeline.alpha, 0.5);
  EXPECT_EQ(cfg.pipeline.base.epochs, 3);
  EXPECT_EQ(cfg.pipeline.base.batch_size, 64u);
}

TEST(ConfigTest, ErrorsNameTheKeyPath) {
  const std::vector<std::pair<std::string, std::string>> cases = {
      {R"({"pipeline": {"k": -1}})", "config: pipeline.k:"},
      {R"({"pipeline": {"kk": 1}})", "config: pipeline.kk: unknown key"},
      {R"({"pipeline": {"alpha": 0.5}})", "config: pipeline.alpha: alpha and tradeoff are mutually exclusive"},
      {R"({"pipeline": {"tradeoff": {"delta_main": -1, "delta_backdoor": 1}}})", "config: pipeline.tradeoff"},
      {R"({"dataset": {"source": "csv", "path": "/nonexistent/x.csv"}})", "config: dataset.path"},
      {R"({"train": {"optimizer": "lbfgs"}})", "config: train.optimizer"},
      {R"({"poison": {"variants": [{"kind": "nope"}]}})", "config: poison.variants[0].kind"},
      {R"({"space": [{"name": "learning_rate", "kind": "log_interval", "low": 0, "high": 1}]})", "config: space"},
      {R"({"profile": "nope"})", "config: profile: unknown profile 'nope'"},
      {R"({"bogus": 1})", "config: bogus: unknown key"},
  };
  for (const auto& [doc, prefix] : cases) {
    const std::string msg = config_error(Json::parse(doc));
    EXPECT_EQ(msg.rfind(prefix, 0), 0u) << doc << " -> '" << msg << "'";
  }
}

TEST(ConfigTest, LoadDataSplitsAndFixesModel) {
  auto cfg = cli::parse_config(small_config());
  const auto s = cli::load_data(cfg);
  EXPECT_EQ(s.train.size(), 1500u);
  EXPECT_EQ(s.val.size() + s.test.size(), 1500u);
  EXPECT_NEAR(static_cast<double>(s.val.size()) / 1500.0, 0.4, 0.01);
  EXPECT_EQ(cfg.pipeline.model.num_classes, 10);
  ASSERT_EQ(cfg.pipeline.model.input_dims.size(), 1u);
  EXPECT_EQ(cfg.pipeline.model.input_dims[0], 20);

  auto big = cli::parse_config(Json::parse(R"({"dataset": {"samples": 100, "train": 100}})"));
  EXPECT_THROW(cli::load_data(big), cli::ConfigError);
}

TEST(ReportTest, Rows) {
  EXPECT_EQ(cli::accuracy_row(0.773, 0.751), "77.3 -> 75.1 (-2.2)");
  EXPECT_EQ(cli::accuracy_row(0.5, 0.52), "50.0 -> 52.0 (+2.0)");
  resistance::ResistancePoint a, b;
  a.p = 0.0091;
  b.p = 0.013559;
  EXPECT_EQ(cli::resistance_row(a, b), "0.0091 -> 0.01356 (x1.49)");
  b.status = resistance::Status::not_reached;
  b.p = 0.1;
  EXPECT_EQ(cli::resistance_row(a, b), "0.0091 -> not-reached (x>10.99)");
}

TEST(ReportTest, FrontierCsvRoundTrip) {
  const auto space = search::default_space();
  std::vector<search::TrialResult> front(2);
  for (int i = 0; i < 2; ++i) {
    auto& t = front[static_cast<std::size_t>(i)];
    t.trial_id = 7 + i;
    t.main_acc = 0.8 - 0.1 * i;
    t.backdoor_acc = 0.3 - 0.2 * i;
    t.point = search::sample_point(space, 40 + static_cast<std::uint64_t>(i));
  }
  front[1].point.erase("grad_noise");  // a space column the point leaves unset
  const fs::path dir = fresh_dir("frontier");
  {
    std::ofstream out(dir / "frontier.csv");
    cli::write_frontier_csv(out, front, 0.9, 8, space);
  }
  const auto rows = cli::read_frontier_csv(dir / "frontier.csv", space);
  ASSERT_EQ(rows.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(rows[i].trial_id, front[i].trial_id);
    EXPECT_EQ(rows[i].main_acc, front[i].main_acc);
    EXPECT_EQ(rows[i].backdoor_acc, front[i].backdoor_acc);
    EXPECT_EQ(rows[i].joint_score, search::joint_score(front[i], 0.9));
    EXPECT_EQ(rows[i].point, front[i].point);
  }
  EXPECT_FALSE(rows[0].selected);
  EXPECT_TRUE(rows[1].selected);
  EXPECT_THROW(cli::read_frontier_csv(dir / "frontier.csv", search::generic_space()), DataError);
}

TEST(CommandTest, UsageErrorsExitOne) {
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"pipeline", "--config", "/nonexistent.json"}).code, cli::kExitUsage);
  const fs::path dir = fresh_dir("usage");
  const CmdResult r = run({"config", "--config", write_config(dir, Json{{"pipeline", {{"k", 0}}}}).string()});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("config: pipeline.k:"), std::string::npos) << r.err;
  EXPECT_EQ(run({"fed-audit", "--config", write_config(dir, small_config()).string(), "--out", dir.string()}).code,
            cli::kExitUsage);
}

TEST(CommandTest, PipelineWritesOutputsAndResumes) {
  const fs::path dir = fresh_dir("pipeline");
  const std::string cfg = write_config(dir, small_config()).string();
  const fs::path out = dir / "out";
  const CmdResult first = run({"pipeline", "--config", cfg, "--out", out.string(), "--workers", "1"});
  ASSERT_EQ(first.code, cli::kExitOk) << first.out << first.err;
  for (const char* f : {"report.json", "frontier.csv", "frontier.svg", "trials.jsonl", "curves/audit1_primary.csv",
                        "curves/audit2_base_primary.csv", "curves/audit2_resistant_primary.csv",
                        "curves/audit2_base_single-pixel.csv"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const Json rep = report_without_time(out);
  EXPECT_EQ(rep.at("status"), "ok");
  EXPECT_EQ(rep.at("stage2").at("trials"), 6);
  EXPECT_EQ(rep.at("per_class").size(), 10u);

  // Written curves match the report.
  const auto curve = resistance::read_curve_csv(out / "curves" / "audit2_base_primary.csv");
  const auto pt = resistance::resistance_point(curve);
  EXPECT_NEAR(pt.p, rep.at("audit2").at("base").at("p").get<double>(), 1e-12);

  // Frontier rows are the report's frontier in order.
  const auto parsed = cli::parse_config(small_config());
  const auto rows = cli::read_frontier_csv(out / "frontier.csv", parsed.pipeline.space);
  ASSERT_EQ(rows.size(), rep.at("stage2").at("frontier").size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].trial_id, rep["stage2"]["frontier"][i]["trial_id"].get<int>());
  }

  const std::size_t lines = count_lines(out / "trials.jsonl");
  const CmdResult again = run({"pipeline", "--config", cfg, "--out", out.string(), "--workers", "1"});
  ASSERT_EQ(again.code, cli::kExitOk);
  EXPECT_NE(again.out.find(" 0 new)"), std::string::npos) << again.out;
  EXPECT_EQ(report_without_time(out), rep);
  EXPECT_EQ(count_lines(out / "trials.jsonl"), lines);

  // A different config in the same directory is refused instead of mixed in.
  Json other = small_config();
  other["seed"] = 9;
  const CmdResult clash = run({"pipeline", "--config", write_config(dir, other).string(), "--out", out.string()});
  EXPECT_NE(clash.code, cli::kExitOk);
}

TEST(CommandTest, ReportReselectsFromLog) {
  const fs::path dir = fresh_dir("report");
  const fs::path out = dir / "out";
  ASSERT_EQ(run({"pipeline", "--config", write_config(dir, small_config()).string(), "--out", out.string(), "--workers",
                 "1"})
                .code,
            cli::kExitOk);
  const Json rep = report_without_time(out);
  const CmdResult same = run({"report", "--out", out.string()});
  ASSERT_EQ(same.code, cli::kExitOk) << same.err;
  EXPECT_NE(same.out.find(" 0 new)"), std::string::npos);
  EXPECT_EQ(report_without_time(out), rep);

  const int other = rep["stage2"]["selected_trial"].get<int>() == 0 ? 1 : 0;
  const CmdResult re = run({"report", "--out", out.string(), "--select", std::to_string(other)});
  EXPECT_NE(re.code, cli::kExitUsage) << re.err;
  EXPECT_EQ(report_without_time(out)["stage2"]["selected_trial"], other);
  EXPECT_EQ(report_without_time(out)["audit1"], rep["audit1"]);

  EXPECT_EQ(run({"report", "--out", out.string(), "--select", "99"}).code, cli::kExitUsage);
}

TEST(CommandTest, WorkerCountDoesNotChangeResults) {
  const fs::path dir = fresh_dir("workers");
  const std::string cfg = write_config(dir, small_config()).string();
  ASSERT_EQ(run({"pipeline", "--config", cfg, "--out", (dir / "w1").string(), "--workers", "1"}).code, cli::kExitOk);
  ASSERT_EQ(run({"pipeline", "--config", cfg, "--out", (dir / "w3").string(), "--workers", "3"}).code, cli::kExitOk);
  EXPECT_EQ(report_without_time(dir / "w1").dump(), report_without_time(dir / "w3").dump());
  EXPECT_EQ(slurp(dir / "w1" / "frontier.csv"), slurp(dir / "w3" / "frontier.csv"));
  EXPECT_EQ(slurp(dir / "w1" / "curves" / "audit2_resistant_primary.csv"),
            slurp(dir / "w3" / "curves" / "audit2_resistant_primary.csv"));
}

TEST(CommandTest, NotMeasurableExitsTwo) {
  const fs::path dir = fresh_dir("unmeasurable");
  Json doc = small_config();
  doc["pipeline"]["grid"] = {{"min", 1e-7}, {"max", 1e-6}, {"points", 3}};
  const CmdResult r = run({"audit", "--config", write_config(dir, doc).string(), "--out", (dir / "out").string()});
  EXPECT_EQ(r.code, cli::kExitNoResult);
  EXPECT_NE(r.out.find("raise"), std::string::npos) << r.out;
  const Json rep = report_without_time(dir / "out");
  EXPECT_EQ(rep.at("status"), "not-measurable");
  EXPECT_FALSE(rep.contains("stage2"));
}

TEST(CommandTest, OutputDirFromEnvironment) {
  const fs::path dir = fresh_dir("env");
  ::setenv("NATRES_OUT", (dir / "from_env").string().c_str(), 1);
  const CmdResult r = run({"audit", "--config", write_config(dir, small_config()).string(), "--workers", "1"});
  ::unsetenv("NATRES_OUT");
  EXPECT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(dir / "from_env" / "report.json"));
}

TEST(CommandTest, FedAuditWritesCurve) {
  const fs::path dir = fresh_dir("fed");
  Json doc = small_config();
  doc["profile"] = "fed-100";
  doc["train"]["epochs"] = 1;
  doc["federated"] = {{"num_users", 20}, {"rounds", 4}, {"round_size", 5}, {"grid", {{"min", 0.05}, {"max", 1.0}, {"points", 4}}}};
  const CmdResult r = run({"fed-audit", "--config", write_config(dir, doc).string(), "--out", (dir / "out").string()});
  EXPECT_NE(r.code, cli::kExitUsage) << r.err;
  EXPECT_NE(r.code, cli::kExitRuntime) << r.err;
  const auto curve = resistance::read_curve_csv(dir / "out" / "curves" / "fed.csv");
  EXPECT_EQ(curve.points.size(), 5u);
  const Json rep = Json::parse(slurp(dir / "out" / "fed_report.json"));
  EXPECT_EQ(rep.at("num_users"), 20);
}
