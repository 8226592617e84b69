// Slot loop for every scheme: sample the slot, decide, account delay and
// energy, advance the virtual queues. Also the V-sweep driver.
#pragma once

#include <algorithm>
#include <chrono>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "satin/baselines.hpp"
#include "satin/hqcgbd.hpp"
#include "satin/io.hpp"
#include "satin/lyapunov.hpp"

namespace satin {

enum class Scheme { Hqcgbd, HqcgbdMulti, Gbd, Heuristic, Myopic };

inline const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::Hqcgbd: return "hqcgbd";
    case Scheme::HqcgbdMulti: return "hqcgbd-multi";
    case Scheme::Gbd: return "gbd";
    case Scheme::Heuristic: return "heuristic";
    case Scheme::Myopic: return "myopic";
  }
  return "?";
}

inline Scheme parse_scheme(const std::string& s) {
  for (Scheme k : {Scheme::Hqcgbd, Scheme::HqcgbdMulti, Scheme::Gbd, Scheme::Heuristic, Scheme::Myopic})
    if (s == scheme_name(k)) return k;
  throw ConfigError("scheme: unknown '" + s + "' (hqcgbd, hqcgbd-multi, gbd, heuristic, myopic)");
}

struct RunRecord {
  std::size_t t = 0;
  Scheme scheme = Scheme::Hqcgbd;
  double total_delay = 0;          // includes tau for every user with no AP
  std::vector<double> slot_energy; // per AP, J
  std::vector<double> backlog;     // Q after this slot's update
  std::size_t iterations = 0;
  double gap = 0;
  std::string termination;
  std::size_t inactive_users = 0;
  bool fallback = false;
  double wall_ms = 0;              // kept out of the run CSV
  std::uint64_t seed = 0;
};

struct RunSummary {
  Scheme scheme = Scheme::Hqcgbd;
  std::uint64_t seed = 0;
  double V = 0;
  std::size_t slots = 0;
  double avg_delay = 0;
  std::vector<double> avg_energy;
  std::vector<double> budget;
  std::vector<std::size_t> slots_over_budget;  // per AP
  std::vector<double> final_backlog;
  double max_backlog = 0;
  std::size_t fallbacks = 0;
  std::size_t inactive_user_slots = 0;
  double avg_iterations = 0;
  double c_star = 0;
  double wall_ms = 0;
};

struct SimulationOptions {
  Scheme scheme = Scheme::Hqcgbd;
  std::optional<std::size_t> slots;  // unset selects the config horizon
  std::uint64_t seed = 1;
  SolverOptions solver;
};

/// Decides one slot. Solver schemes use an anneal seed derived from (seed, t).
inline RunRecord run_slot(const NetworkConfig& cfg, const SlotState& s, const QueueState& q,
                          const SimulationOptions& opt) {
  RunRecord rec;
  rec.t = s.t;
  rec.scheme = opt.scheme;
  rec.seed = opt.seed;
  rec.inactive_users = s.inactive_users();
  auto t0 = std::chrono::steady_clock::now();
  SolverOptions so = opt.solver;
  so.anneal.seed = stream_seed(opt.seed, 0x736f6c7665ULL, s.t + 1);
  ServiceOutcome out;
  auto take = [&](const SolveResult& r) {
    out = service_delay(cfg, s, r.assignment(), r.allocation());
    rec.iterations = r.trace.iteration_count();
    rec.gap = r.trace.final_gap();
    rec.termination = termination_name(r.trace.reason);
  };
  switch (opt.scheme) {
    case Scheme::Hqcgbd: take(solve_slot_single_cut(cfg, s, q, so)); break;
    case Scheme::HqcgbdMulti: take(solve_slot_multi_cut(cfg, s, q, so)); break;
    case Scheme::Gbd: take(solve_slot_classical_gbd(cfg, s, q, so)); break;
    case Scheme::Heuristic: {
      auto h = heuristic_slot(cfg, s, opt.seed);
      out = h.outcome;
      rec.termination = "none";
      break;
    }
    case Scheme::Myopic: {
      auto m = myopic_slot(cfg, s, so);
      out = m.outcome;
      rec.fallback = m.fallback;
      rec.iterations = m.trace.iteration_count();
      rec.gap = m.fallback ? 0 : m.trace.final_gap();
      rec.termination = m.fallback ? "fallback" : termination_name(m.trace.reason);
      break;
    }
  }
  rec.wall_ms = detail::elapsed_ms(t0);
  rec.total_delay = out.total_delay + static_cast<double>(rec.inactive_users) * cfg.slot_duration_s;
  rec.slot_energy = out.ap_energy;
  return rec;
}

/// Runs the slot loop. `on_record` sees each record as soon as it is final.
inline RunSummary simulate(const NetworkConfig& cfg, const SimulationOptions& opt,
                           const std::function<void(const RunRecord&)>& on_record = {}) {
  cfg.validate();
  opt.solver.control.validate();
  const std::size_t M = cfg.ap_count();
  const std::size_t T = opt.slots.value_or(cfg.horizon);
  const auto budget = energy_budgets(cfg);
  RunSummary sum;
  sum.scheme = opt.scheme;
  sum.seed = opt.seed;
  sum.V = opt.solver.control.V;
  sum.avg_energy.assign(M, 0.0);
  sum.budget = budget;
  sum.slots_over_budget.assign(M, 0);
  sum.c_star = c_star(cfg);
  QueueState q(M);
  double iters = 0;
  for (std::size_t t = 0; t < T; ++t) {
    SlotState s = sample_slot(cfg, t, opt.seed);
    RunRecord rec = run_slot(cfg, s, q, opt);
    q = update_queue(q, rec.slot_energy, budget);
    rec.backlog = q.backlog;
    sum.avg_delay += rec.total_delay;
    for (std::size_t m = 0; m < M; ++m) {
      sum.avg_energy[m] += rec.slot_energy[m];
      if (rec.slot_energy[m] > budget[m] * (1 + 1e-9)) ++sum.slots_over_budget[m];
      sum.max_backlog = std::max(sum.max_backlog, q[m]);
    }
    sum.fallbacks += rec.fallback;
    sum.inactive_user_slots += rec.inactive_users;
    sum.wall_ms += rec.wall_ms;
    iters += static_cast<double>(rec.iterations);
    if (on_record) on_record(rec);
  }
  sum.slots = T;
  if (T > 0) {
    double n = static_cast<double>(T);
    sum.avg_delay /= n;
    for (auto& e : sum.avg_energy) e /= n;
    sum.avg_iterations = iters / n;
  }
  sum.final_backlog = q.backlog;
  return sum;
}

// ---- persistence ------------------------------------------------------------

/// Wide layout: one row per slot, per-AP columns suffixed with the AP index.
inline void write_run_header(std::ostream& os, std::size_t aps) {
  os << "# schema: " << kRunSchema << '\n' << "t,scheme,seed,total_delay";
  for (std::size_t m = 0; m < aps; ++m) os << ",energy_" << m;
  for (std::size_t m = 0; m < aps; ++m) os << ",q_" << m;
  os << ",iterations,gap,termination,inactive_users,fallback\n";
}

inline void write_run_row(std::ostream& os, const RunRecord& r) {
  os << r.t << ',' << scheme_name(r.scheme) << ',' << r.seed << ',' << fmt_double(r.total_delay);
  for (double e : r.slot_energy) os << ',' << fmt_double(e);
  for (double q : r.backlog) os << ',' << fmt_double(q);
  os << ',' << r.iterations << ',' << fmt_double(r.gap) << ',' << r.termination << ',' << r.inactive_users << ','
     << (r.fallback ? 1 : 0) << '\n';
}

inline void write_timing_header(std::ostream& os) { os << "t,scheme,seed,wall_ms\n"; }

inline void write_timing_row(std::ostream& os, const RunRecord& r) {
  os << r.t << ',' << scheme_name(r.scheme) << ',' << r.seed << ',' << fmt_double(r.wall_ms) << '\n';
}

inline Json summary_to_json(const RunSummary& s, const std::string& hash) {
  return {{"scheme", scheme_name(s.scheme)},
          {"seed", s.seed},
          {"V", s.V},
          {"slots", s.slots},
          {"avg_delay", s.avg_delay},
          {"avg_energy", s.avg_energy},
          {"energy_budget", s.budget},
          {"slots_over_budget", s.slots_over_budget},
          {"final_backlog", s.final_backlog},
          {"max_backlog", s.max_backlog},
          {"fallbacks", s.fallbacks},
          {"inactive_user_slots", s.inactive_user_slots},
          {"avg_iterations", s.avg_iterations},
          {"c_star", s.c_star},
          {"c_star_over_v", s.V > 0 ? Json(s.c_star / s.V) : Json(nullptr)},
          {"config_hash", hash},
          {"code_version", kCodeVersion}};
}

// ---- V sweep ----------------------------------------------------------------

struct SweepRow {
  double V = 0;
  std::uint64_t seed = 0;
  RunSummary summary;
};

inline std::vector<SweepRow> sweep_v(const NetworkConfig& cfg, SimulationOptions opt, const std::vector<double>& vs,
                                     const std::vector<std::uint64_t>& seeds,
                                     const std::function<void(const SweepRow&)>& on_row = {}) {
  if (vs.empty()) throw ConfigError("v: at least one value required");
  if (seeds.empty()) throw ConfigError("seed: at least one value required");
  std::vector<SweepRow> rows;
  for (double v : vs)
    for (auto seed : seeds) {
      opt.solver.control.V = v;
      opt.seed = seed;
      rows.push_back({v, seed, simulate(cfg, opt)});
      if (on_row) on_row(rows.back());
    }
  return rows;
}

inline void write_sweep_header(std::ostream& os, std::size_t aps) {
  os << "# schema: " << kRunSchema << '\n' << "V,seed,scheme,slots,avg_delay";
  for (std::size_t m = 0; m < aps; ++m) os << ",avg_energy_" << m;
  os << ",avg_total_energy,max_backlog,c_star_over_v\n";
}

inline double total_energy(const RunSummary& s) {
  double e = 0;
  for (double x : s.avg_energy) e += x;
  return e;
}

inline void write_sweep_row(std::ostream& os, const SweepRow& r) {
  const auto& s = r.summary;
  os << fmt_double(r.V) << ',' << r.seed << ',' << scheme_name(s.scheme) << ',' << s.slots << ','
     << fmt_double(s.avg_delay);
  for (double e : s.avg_energy) os << ',' << fmt_double(e);
  os << ',' << fmt_double(total_energy(s)) << ',' << fmt_double(s.max_backlog) << ','
     << (r.V > 0 ? fmt_double(s.c_star / r.V) : std::string("inf")) << '\n';
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct TrendPoint {
  double V = 0;
  double delay = 0;   // median over seeds
  double energy = 0;  // median total AP energy over seeds
};

/// Median-aggregates sweep rows per V, in ascending V.
inline std::vector<TrendPoint> trend_points(const std::vector<SweepRow>& rows) {
  std::vector<double> vs;
  for (const auto& r : rows) vs.push_back(r.V);
  std::sort(vs.begin(), vs.end());
  vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
  std::vector<TrendPoint> out;
  for (double v : vs) {
    std::vector<double> d, e;
    for (const auto& r : rows)
      if (r.V == v) {
        d.push_back(r.summary.avg_delay);
        e.push_back(total_energy(r.summary));
      }
    out.push_back({v, median(d), median(e)});
  }
  return out;
}

/// Adjacent pairs that break the direction (+1 nondecreasing, -1 nonincreasing).
inline std::size_t count_inversions(const std::vector<double>& v, int direction, double rel_tol = 1e-9) {
  std::size_t n = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    double d = (v[i] - v[i - 1]) * direction;
    if (d < -rel_tol * std::max(std::abs(v[i]), std::abs(v[i - 1]))) ++n;
  }
  return n;
}

struct TrendCheck {
  std::size_t delay_inversions = 0;
  std::size_t energy_inversions = 0;
  bool pass = false;
};

/// Delay must not rise with V and energy must not fall, up to `allowed`
/// inversions each.
inline TrendCheck check_v_trend(const std::vector<TrendPoint>& pts, std::size_t allowed = 1) {
  std::vector<double> d, e;
  for (const auto& p : pts) {
    d.push_back(p.delay);
    e.push_back(p.energy);
  }
  TrendCheck c;
  c.delay_inversions = count_inversions(d, -1);
  c.energy_inversions = count_inversions(e, +1);
  c.pass = c.delay_inversions <= allowed && c.energy_inversions <= allowed;
  return c;
}

}  // namespace satin
