// Copyright 2026 The natres Authors
// SPDX-License-Identifier: Apache-2.0

#include "natres/resistance/resistance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <ostream>

#include "natres/csv.hpp"
#include "natres/error.hpp"
#include "natres/parallel.hpp"
#include "natres/rng.hpp"

namespace natres::resistance {

std::vector<double> exp_grid(double p_min, double p_max, int n) {
  if (!(p_min > 0.0 && p_min < p_max && p_max <= 1.0)) {
    throw InvalidArgument("exp_grid: need 0 < p_min < p_max <= 1");
  }
  if (n < 2) throw InvalidArgument("exp_grid: need at least 2 points");
  std::vector<double> grid{0.0};
  const double lo = std::log10(p_min);
  const double hi = std::log10(p_max);
  for (int i = 0; i < n; ++i) {
    if (i == 0) {
      grid.push_back(p_min);
    } else if (i == n - 1) {
      grid.push_back(p_max);
    } else {
      grid.push_back(std::pow(10.0, lo + (hi - lo) * i / (n - 1)));
    }
  }
  return grid;
}

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

PoisonCurve build_curve(const std::vector<double>& grid, int repeats, std::uint64_t master_seed,
                        const PointFn& point, int workers) {
  if (repeats < 1) throw InvalidArgument("build_curve: repeats must be >= 1");
  if (grid.empty() || grid.front() != 0.0) throw InvalidArgument("build_curve: grid must start at p = 0");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw InvalidArgument("build_curve: grid must be strictly increasing");
  }
  const auto r = static_cast<std::size_t>(repeats);
  std::vector<std::uint64_t> seeds(r);
  for (std::size_t k = 0; k < r; ++k) seeds[k] = derive_seed(master_seed, "repeat", {k});

  struct Slot {
    PointMetrics m;
    bool ok = false;
  };
  std::vector<Slot> slots(grid.size() * r);
  parallel_for(slots.size(), workers, [&](std::size_t job) {
    const std::size_t i = job / r;
    const std::size_t k = job % r;
    try {
      slots[job].m = point(grid[i], seeds[k]);
      slots[job].ok = true;
    } catch (const NumericError&) {
      slots[job].ok = false;
    }
  });

  PoisonCurve curve;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CurvePoint pt;
    pt.p = grid[i];
    pt.seeds = seeds;
    for (std::size_t k = 0; k < r; ++k) {
      const Slot& s = slots[i * r + k];
      if (!s.ok) continue;
      pt.backdoor_repeats.push_back(s.m.backdoor_acc);
      pt.main_repeats.push_back(s.m.main_acc);
    }
    pt.failed = pt.backdoor_repeats.empty();
    if (!pt.failed) {
      pt.backdoor_acc = median(pt.backdoor_repeats);
      pt.main_acc = median(pt.main_repeats);
    }
    curve.points.push_back(std::move(pt));
  }
  return curve;
}

PointFn central_point_fn(const CentralSetup& setup) {
  if (setup.train == nullptr || setup.val == nullptr) {
    throw InvalidArgument("central_point_fn: train and val sets are required");
  }
  auto eval = std::make_shared<const data::Dataset>(poison::poison_eval_set(*setup.val, setup.spec));
  return [setup, eval](double p, std::uint64_t seed) {
    poison::PoisonSpec spec = setup.spec;
    spec.fraction = p;
    spec.seed = derive_seed(seed, "poison");
    const data::Dataset poisoned = poison::wrap_dataset(*setup.train, spec).materialize();
    nn::TrainConfig cfg = setup.cfg;
    cfg.seed = derive_seed(seed, "train");
    const auto params = nn::train(poisoned, setup.model, cfg).params;
    PointMetrics m;
    m.backdoor_acc = nn::evaluate(params, setup.model, *eval).accuracy;
    m.main_acc = nn::evaluate(params, setup.model, *setup.val).accuracy;
    return m;
  };
}

std::string to_string(Method m) { return m == Method::midpoint ? "midpoint" : "inflection"; }

std::string to_string(Status s) {
  switch (s) {
    case Status::ok: return "ok";
    case Status::not_reached: return "not-reached";
    case Status::not_measurable: return "not-measurable";
  }
  return "ok";
}

double ResistancePoint::ordering_value() const {
  return measured() ? p : std::numeric_limits<double>::infinity();
}

namespace {

ResistancePoint midpoint(const std::vector<const CurvePoint*>& pts, ResistancePoint rp) {
  const double t = rp.threshold;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double b = pts[i]->backdoor_acc;
    if (b < t) continue;
    if (pts[i]->p == 0.0 || (i > 0 && pts[i - 1]->p == 0.0)) {
      // Brackets touching p = 0 have no log position; use the first nonzero p.
      for (const CurvePoint* q : pts) {
        if (q->p > 0.0) {
          rp.p = q->p;
          return rp;
        }
      }
    }
    if (b == t || i == 0) {
      rp.p = pts[i]->p;
      return rp;
    }
    const CurvePoint& lo = *pts[i - 1];
    const CurvePoint& hi = *pts[i];
    const double frac = (t - lo.backdoor_acc) / (hi.backdoor_acc - lo.backdoor_acc);
    const double lp = std::log10(lo.p) + frac * (std::log10(hi.p) - std::log10(lo.p));
    rp.p = std::pow(10.0, lp);
    return rp;
  }
  rp.status = Status::not_reached;
  rp.p = pts.back()->p;
  return rp;
}

ResistancePoint inflection(const std::vector<const CurvePoint*>& pts, ResistancePoint rp) {
  std::vector<double> x, y;
  for (const CurvePoint* q : pts) {
    if (q->p <= 0.0) continue;
    x.push_back(std::log10(q->p));
    y.push_back(q->backdoor_acc);
  }
  // Second difference on a possibly uneven log grid: change of slope at i.
  std::vector<double> d2(x.size(), 0.0);
  for (std::size_t i = 1; i + 1 < x.size(); ++i) {
    d2[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]) - (y[i] - y[i - 1]) / (x[i] - x[i - 1]);
  }
  for (std::size_t i = 1; i + 2 < x.size(); ++i) {
    if (d2[i] > 0.0 && d2[i + 1] < 0.0) {
      rp.p = std::pow(10.0, 0.5 * (x[i] + x[i + 1]));
      return rp;
    }
  }
  rp.status = Status::not_reached;
  rp.p = pts.back()->p;
  return rp;
}

}  // namespace

ResistancePoint resistance_point(const PoisonCurve& curve, const ResistanceOptions& options) {
  std::vector<const CurvePoint*> pts;
  for (const CurvePoint& q : curve.points) {
    if (!q.failed) pts.push_back(&q);
  }
  if (pts.size() < 3) throw InvalidArgument("resistance_point: need at least 3 usable curve points");
  ResistancePoint rp;
  rp.method = options.method;
  rp.a_min = pts.front()->backdoor_acc;
  rp.a_max = pts.front()->backdoor_acc;
  for (const CurvePoint* q : pts) {
    rp.a_min = std::min(rp.a_min, q->backdoor_acc);
    rp.a_max = std::max(rp.a_max, q->backdoor_acc);
  }
  const double bottom = options.reference_min.value_or(rp.a_min);
  const double top = options.reference_max.value_or(rp.a_max);
  rp.threshold = bottom + 0.5 * (top - bottom);
  if (top - bottom < kMinMeasurableSpan) {
    rp.status = Status::not_measurable;
    rp.p = pts.back()->p;
    return rp;
  }
  return options.method == Method::midpoint ? midpoint(pts, rp) : inflection(pts, rp);
}

void write_curve_csv(std::ostream& out, const PoisonCurve& curve) {
  out << "p,backdoor_acc,main_acc,repeat_seeds\n";
  for (const CurvePoint& q : curve.points) {
    out << csv::format_double(q.p) << ',';
    if (q.failed) {
      out << "nan,nan,";
    } else {
      out << csv::format_double(q.backdoor_acc) << ',' << csv::format_double(q.main_acc) << ',';
    }
    for (std::size_t k = 0; k < q.seeds.size(); ++k) out << (k ? ";" : "") << q.seeds[k];
    out << '\n';
  }
}

void write_curve_csv(const std::filesystem::path& path, const PoisonCurve& curve) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_curve_csv(out, curve);
}

PoisonCurve read_curve_csv(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  const std::vector<std::string> expected{"p", "backdoor_acc", "main_acc", "repeat_seeds"};
  if (t.header != expected) throw DataError("'" + path.string() + "': not a poisoning curve file");
  PoisonCurve curve;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string where = "'" + path.string() + "' row " + std::to_string(t.line_numbers[r]);
    if (row.size() != 4) throw DataError(where + ": expected 4 cells");
    CurvePoint q;
    if (!csv::parse_double(row[0], q.p)) throw DataError(where + ": bad p");
    if (row[1] == "nan") {
      q.failed = true;
    } else if (!csv::parse_double(row[1], q.backdoor_acc) || !csv::parse_double(row[2], q.main_acc)) {
      throw DataError(where + ": bad accuracy");
    }
    std::size_t start = 0;
    const std::string& s = row[3];
    while (start < s.size()) {
      const std::size_t end = std::min(s.find(';', start), s.size());
      q.seeds.push_back(std::stoull(s.substr(start, end - start)));
      start = end + 1;
    }
    curve.points.push_back(std::move(q));
  }
  return curve;
}

}  // namespace natres::resistance
