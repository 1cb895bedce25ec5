// Copyright 2026 The natres Authors
// SPDX-License-Identifier: Apache-2.0

#include "natres/cli/report.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "natres/csv.hpp"
#include "natres/search/trial_log.hpp"

namespace natres::cli {

namespace {

std::string fixed(double v, int digits) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : "inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sig(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : "inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json point_json(const resistance::ResistancePoint& p) {
  return {{"p", finite_or_null(p.p)},
          {"status", resistance::to_string(p.status)},
          {"method", resistance::to_string(p.method)},
          {"a_min", p.a_min},
          {"a_max", p.a_max},
          {"threshold", p.threshold}};
}

Json audit_json(const search::AuditResult& a) {
  Json j = point_json(a.point);
  j["main_acc_clean"] = a.curve.points.empty() ? Json(nullptr) : finite_or_null(a.curve.points.front().main_acc);
  Json curve = Json::array();
  for (const auto& q : a.curve.points) {
    curve.push_back({{"p", q.p},
                     {"backdoor_acc", q.failed ? Json(nullptr) : Json(q.backdoor_acc)},
                     {"main_acc", q.failed ? Json(nullptr) : Json(q.main_acc)}});
  }
  j["curve"] = std::move(curve);
  return j;
}

Json stage_json(const search::StageResult& s) {
  int complete = 0, failed = 0, stopped = 0;
  for (const auto& t : s.trials) {
    complete += t.status == search::TrialStatus::complete;
    failed += t.status == search::TrialStatus::failed;
    stopped += t.status == search::TrialStatus::stopped_early;
  }
  return {{"trials", s.trials.size()},
          {"complete", complete},
          {"stopped_early", stopped},
          {"failed", failed},
          {"rung_epochs", s.rung_epochs},
          {"epochs_consumed", s.epochs_consumed}};
}

std::string variant_file(const std::string& who, const std::string& name) { return "audit2_" + who + "_" + name + ".csv"; }

}  // namespace

std::string accuracy_row(double before, double after) {
  const double d = 100.0 * (after - before);
  return fixed(100.0 * before, 1) + " -> " + fixed(100.0 * after, 1) + " (" + (d >= 0 ? "+" : "") + fixed(d, 1) + ")";
}

std::string resistance_row(const resistance::ResistancePoint& before, const resistance::ResistancePoint& after) {
  auto show = [](const resistance::ResistancePoint& p) {
    return p.measured() ? sig(p.p) : resistance::to_string(p.status);
  };
  std::string s = show(before) + " -> " + show(after);
  if (before.measured() && after.measured()) s += " (x" + fixed(after.p / before.p, 2) + ")";
  else if (before.measured()) s += " (x>" + fixed(after.p / before.p, 2) + ")";  // after.p is the largest rate probed
  return s;
}

Json report_json(const search::PipelineReport& rep, const RunConfig& cfg, const std::string& generated_at) {
  Json j;
  j["tool"] = "natres";
  j["version"] = kToolVersion;
  j["generated_at"] = generated_at;
  j["config_hash"] = cfg.hash;
  j["profile"] = cfg.profile;
  j["seed"] = cfg.pipeline.seed;
  j["status"] = search::to_string(rep.status);
  j["message"] = rep.message;

  j["stage1"] = stage_json(rep.stage1);
  j["stage1"]["lambda"] = search::to_json(rep.lambda);
  j["sanity"] = {{"attempts", rep.sanity.attempts},
                 {"regenerated", rep.sanity.regenerated()},
                 {"backdoor_accuracy", rep.sanity.backdoor_accuracy}};
  j["audit1"] = audit_json(rep.audit1);
  if (rep.stage2.trials.empty()) return j;  // stopped after Audit 1

  j["stage2"] = stage_json(rep.stage2);
  j["stage2"]["p_star"] = rep.p_star;
  j["stage2"]["k"] = cfg.pipeline.k;
  j["stage2"]["alpha"] = rep.alpha;
  Json front = Json::array();
  for (const auto& t : rep.frontier) {
    front.push_back({{"trial_id", t.trial_id},
                     {"main_acc", t.main_acc},
                     {"backdoor_acc", t.backdoor_acc},
                     {"joint_score", search::joint_score(t, rep.alpha)}});
  }
  j["stage2"]["frontier"] = std::move(front);
  j["stage2"]["selected_trial"] = rep.selected_trial;
  j["stage2"]["lambda_r"] = search::to_json(rep.lambda_r);

  j["audit2"] = {{"base", audit_json(rep.audit2_base)},
                 {"resistant", audit_json(rep.audit2_resistant)},
                 {"resistance_ratio", finite_or_null(rep.resistance_ratio())},
                 {"main_drop", finite_or_null(rep.main_base() - rep.main_resistant())}};
  j["summary"] = {{"main_accuracy", accuracy_row(rep.main_base(), rep.main_resistant())},
                  {"resistance_point", resistance_row(rep.audit2_base.point, rep.audit2_resistant.point)}};

  Json vars = Json::array();
  for (const auto& v : rep.variants) {
    Json e{{"name", v.spec.name},
           {"kind", poison::to_string(v.spec.kind)},
           {"coverage", v.spec.coverage},
           {"sanity_attempts", v.sanity_attempts}};
    if (!v.error.empty()) {
      e["error"] = v.error;
    } else {
      e["base"] = point_json(v.base.point);
      e["resistant"] = point_json(v.resistant.point);
      e["summary"] = resistance_row(v.base.point, v.resistant.point);
    }
    vars.push_back(std::move(e));
  }
  j["variants"] = std::move(vars);

  Json classes = Json::array();
  for (std::size_t i = 0; i < rep.per_class.base.size(); ++i) {
    const auto& b = rep.per_class.base[i];
    Json row{{"label", b.label}, {"count", b.count}, {"base", b.accuracy()}};
    if (i < rep.per_class.resistant.size()) {
      row["resistant"] = rep.per_class.resistant[i].accuracy();
      row["summary"] = accuracy_row(b.accuracy(), rep.per_class.resistant[i].accuracy());
    }
    classes.push_back(std::move(row));
  }
  j["per_class"] = std::move(classes);

  Json imp = Json::array();
  for (const auto& r : rep.importance_table) imp.push_back({{"name", r.name}, {"main", r.main}, {"backdoor", r.backdoor}});
  j["importance"] = std::move(imp);
  return j;
}

void write_frontier_csv(std::ostream& out, const std::vector<search::TrialResult>& frontier, double alpha,
                        int selected, const search::SearchSpace& space) {
  out << "trial_id,main_acc,backdoor_acc,joint_score,selected";
  for (const auto& d : space.domains()) out << ',' << d.name;
  out << '\n';
  for (const auto& t : frontier) {
    out << t.trial_id << ',' << csv::format_double(t.main_acc) << ',' << csv::format_double(t.backdoor_acc) << ','
        << csv::format_double(search::joint_score(t, alpha)) << ',' << (t.trial_id == selected ? 1 : 0);
    for (const auto& d : space.domains()) {
      const auto it = t.point.find(d.name);
      out << ',' << (it == t.point.end() ? std::string() : search::format_value(it->second));
    }
    out << '\n';
  }
}

std::vector<FrontierRow> read_frontier_csv(const std::filesystem::path& path, const search::SearchSpace& space) {
  const csv::Table t = csv::read(path);
  std::vector<std::string> expected{"trial_id", "main_acc", "backdoor_acc", "joint_score", "selected"};
  for (const auto& d : space.domains()) expected.push_back(d.name);
  if (t.header != expected) throw DataError("'" + path.string() + "': header does not match the search space");
  std::vector<FrontierRow> rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& cells = t.rows[r];
    const std::string where = "'" + path.string() + "' row " + std::to_string(t.line_numbers[r]);
    if (cells.size() != expected.size()) throw DataError(where + ": expected " + std::to_string(expected.size()) + " cells");
    FrontierRow row;
    double id = 0, sel = 0;
    if (!csv::parse_double(cells[0], id) || !csv::parse_double(cells[1], row.main_acc) ||
        !csv::parse_double(cells[2], row.backdoor_acc) || !csv::parse_double(cells[3], row.joint_score) ||
        !csv::parse_double(cells[4], sel)) {
      throw DataError(where + ": bad number");
    }
    row.trial_id = static_cast<int>(id);
    row.selected = sel != 0.0;
    for (std::size_t c = 0; c < space.domains().size(); ++c) {
      const auto& d = space.domains()[c];
      const std::string& cell = cells[5 + c];
      if (cell.empty()) continue;
      if (d.kind == search::DomainKind::categorical) {
        row.point[d.name] = cell;
      } else {
        double v = 0;
        if (!csv::parse_double(cell, v)) throw DataError(where + ": bad value for " + d.name);
        if (d.kind == search::DomainKind::int_set) row.point[d.name] = static_cast<std::int64_t>(v);
        else row.point[d.name] = v;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_frontier_svg(std::ostream& out, const std::vector<search::TrialResult>& trials,
                        const std::vector<search::TrialResult>& frontier, int selected) {
  constexpr double W = 480, H = 360, M = 48;
  auto x = [&](double main) { return M + main * (W - 2 * M); };
  auto y = [&](double bd) { return H - M - bd * (H - 2 * M); };
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect x=\"" << M << "\" y=\"" << M << "\" width=\"" << W - 2 * M << "\" height=\"" << H - 2 * M
      << "\" fill=\"none\" stroke=\"#888\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">main accuracy</text>\n";
  out << "<text x=\"14\" y=\"" << H / 2 << "\" transform=\"rotate(-90 14 " << H / 2
      << ")\" text-anchor=\"middle\">backdoor accuracy</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = i / 4.0;
    out << "<text x=\"" << x(v) << "\" y=\"" << H - M + 14 << "\" text-anchor=\"middle\">" << fixed(v, 2) << "</text>\n";
    out << "<text x=\"" << M - 4 << "\" y=\"" << y(v) + 4 << "\" text-anchor=\"end\">" << fixed(v, 2) << "</text>\n";
  }
  for (const auto& t : trials) {
    if (t.status != search::TrialStatus::complete) continue;
    out << "<circle cx=\"" << fixed(x(t.main_acc), 2) << "\" cy=\"" << fixed(y(t.backdoor_acc), 2)
        << "\" r=\"2.5\" fill=\"#9ab\"/>\n";
  }
  if (!frontier.empty()) {
    out << "<polyline fill=\"none\" stroke=\"#c33\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < frontier.size(); ++i) {
      const auto& f = frontier[i];
      if (i > 0) out << fixed(x(f.main_acc), 2) << ',' << fixed(y(frontier[i - 1].backdoor_acc), 2) << ' ';
      out << fixed(x(f.main_acc), 2) << ',' << fixed(y(f.backdoor_acc), 2) << ' ';
    }
    out << "\"/>\n";
    for (const auto& f : frontier) {
      out << "<circle cx=\"" << fixed(x(f.main_acc), 2) << "\" cy=\"" << fixed(y(f.backdoor_acc), 2)
          << "\" r=\"3.5\" fill=\"#c33\"/>\n";
      if (f.trial_id == selected) {
        out << "<circle cx=\"" << fixed(x(f.main_acc), 2) << "\" cy=\"" << fixed(y(f.backdoor_acc), 2)
            << "\" r=\"7\" fill=\"none\" stroke=\"#000\"/>\n";
      }
    }
  }
  out << "</svg>\n";
}

void write_outputs(const std::filesystem::path& dir, const search::PipelineReport& rep, const RunConfig& cfg,
                   const std::string& generated_at) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "curves");
  {
    std::ofstream out(dir / "report.json");
    if (!out) throw DataError("cannot write '" + (dir / "report.json").string() + "'");
    out << report_json(rep, cfg, generated_at).dump(2) << '\n';
  }
  resistance::write_curve_csv(dir / "curves" / "audit1_primary.csv", rep.audit1.curve);
  if (rep.stage2.trials.empty()) return;
  {
    std::ofstream out(dir / "frontier.csv");
    write_frontier_csv(out, rep.frontier, rep.alpha, rep.selected_trial, cfg.pipeline.space);
  }
  {
    std::ofstream out(dir / "frontier.svg");
    write_frontier_svg(out, rep.stage2.trials, rep.frontier, rep.selected_trial);
  }
  resistance::write_curve_csv(dir / "curves" / "audit2_base_primary.csv", rep.audit2_base.curve);
  resistance::write_curve_csv(dir / "curves" / "audit2_resistant_primary.csv", rep.audit2_resistant.curve);
  for (const auto& v : rep.variants) {
    if (!v.error.empty()) continue;
    resistance::write_curve_csv(dir / "curves" / variant_file("base", v.spec.name), v.base.curve);
    resistance::write_curve_csv(dir / "curves" / variant_file("resistant", v.spec.name), v.resistant.curve);
  }
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace natres::cli
