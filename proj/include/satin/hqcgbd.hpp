// Benders iteration for one slot: subproblem solves produce cuts and upper
// bounds, the master (sampled QUBO or exact search) produces lower bounds and
// the next assignments to evaluate.
#pragma once

#include <chrono>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "satin/annealer.hpp"
#include "satin/lyapunov.hpp"
#include "satin/master.hpp"
#include "satin/subproblem.hpp"

namespace satin {

enum class Termination { Gap, GapUnconfirmed, IterationLimit, Stalled };

inline const char* termination_name(Termination t) {
  switch (t) {
    case Termination::Gap: return "gap";
    case Termination::GapUnconfirmed: return "gap-unconfirmed";
    case Termination::IterationLimit: return "iteration-limit";
    case Termination::Stalled: return "stalled";
  }
  return "?";
}

struct IterationRecord {
  std::size_t l = 0;
  double ub = kInf;
  double lb = -kInf;
  double gap = kInf;
  std::size_t cuts_added = 0;
  std::size_t cuts_total = 0;
  double master_ms = 0;
  double sub_ms = 0;
};

struct SolveTrace {
  std::vector<IterationRecord> iterations;
  Termination reason = Termination::IterationLimit;
  std::size_t escalations = 0;
  std::size_t resamples = 0;
  std::size_t qubo_vars = 0;  // size of the last compiled master

  std::size_t iteration_count() const { return iterations.size(); }
  double final_gap() const { return iterations.empty() ? kInf : iterations.back().gap; }
};

inline AnnealParams solver_anneal_defaults() {
  AnnealParams p;
  p.num_reads = 20;
  p.sweeps = 100;
  p.auto_beta = true;
  return p;
}

struct SolverOptions {
  ControlParams control;
  AnnealParams anneal = solver_anneal_defaults();
  MuEncoding encoding{2, 2, 0};
  /// Initial penalty weights (0 = compile default). The cut family is kept
  /// soft so single flips can move between assignments; candidates are
  /// ranked by their exact epigraph value, not by the decoded mu.
  PenaltyWeights penalties{0, 0, 0, 0, 0.1};
  double coefficient_cap = 1e12;
  std::size_t max_escalations = 3;
  std::size_t confirm_reads = 3;
  std::size_t max_resamples = 2;
  double size_cap = 1048576.0;
  bool hard_energy_budget = false;
  const Sampler* sampler = nullptr;  // simulated annealing when null
  /// Single-user descent on the exact epigraph from each decoded candidate.
  bool polish = true;
};

struct SolveResult {
  SubproblemSolution solution;  // incumbent; allocation and phi inside
  SolveTrace trace;
  std::size_t evaluated = 0;    // distinct assignments solved
  MasterModel master;           // with every cut generated during the solve

  const Assignment& assignment() const { return solution.assignment; }
  const Allocation& allocation() const { return solution.allocation; }
  double phi() const { return solution.phi; }
};

/// Available AP with the largest SNR (lowest index on ties); -1 if none.
inline int strongest_ap(const NetworkConfig& cfg, const SlotState& s, std::size_t u) {
  int best = -1;
  double best_snr = -1;
  for (std::size_t m = 0; m < s.aps(); ++m) {
    if (!s.available(u, m)) continue;
    double v = snr(cfg, m, s.gain(u, m));
    if (v > best_snr) {
      best_snr = v;
      best = static_cast<int>(m);
    }
  }
  return best;
}

/// Max-SNR association with onboard compute wherever permitted, projected
/// onto the master's screens. Falls back to the first feasible assignment in
/// lexicographic order.
inline Assignment initial_assignment(const NetworkConfig& cfg, const SlotState& s, const MasterModel& mm) {
  const std::size_t U = s.users(), M = s.aps();
  std::vector<Choice> pick(U);
  for (std::size_t u = 0; u < U; ++u) {
    int m = strongest_ap(cfg, s, u);
    if (m >= 0) pick[u] = {m, mm.computes[static_cast<std::size_t>(m)] != 0};
  }
  // Projection: demote onboard tasks, then move users off overfull APs.
  auto count = [&](std::size_t m, bool onboard) {
    std::size_t n = 0;
    for (auto& c : pick) n += c.ap == static_cast<int>(m) && (!onboard || c.local);
    return n;
  };
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t u = U; u-- > 0 && count(m, true) > mm.max_onboard[m];)
      if (pick[u].ap == static_cast<int>(m) && pick[u].local) pick[u].local = false;
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t u = U; u-- > 0 && count(m, false) > mm.max_associated[m];) {
      if (pick[u].ap != static_cast<int>(m)) continue;
      for (std::size_t m2 = 0; m2 < M; ++m2)
        if (m2 != m && s.available(u, m2) && count(m2, false) < mm.max_associated[m2]) {
          pick[u] = {static_cast<int>(m2), false};
          break;
        }
    }
  if (mm.energy_screen) {
    // Prefer the lower-energy path per user until the screen passes.
    for (std::size_t u = 0; u < U; ++u) {
      Assignment a = Assignment::from_choices(pick, M);
      if (mm.screen_ok(a)) break;
      if (pick[u].ap < 0) continue;
      auto m = static_cast<std::size_t>(pick[u].ap);
      if (mm.computes[m]) pick[u].local = mm.onboard_min_energy(u, m) < mm.relay_energy(u, m);
    }
  }
  Assignment a = Assignment::from_choices(pick, M);
  if (mm.feasible(a)) return a;
  MasterModel empty = mm;
  empty.cuts.clear();
  auto first = solve_master_exact(empty, kInf);
  if (!first.found) throw InfeasibleAssignment("no assignment passes the capacity screens");
  return first.assignment;
}

namespace detail {

inline double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

inline double relative_gap(double ub, double lb) {
  if (!std::isfinite(ub) || !std::isfinite(lb)) return kInf;
  double scale = std::max(std::abs(ub), 1e-12);
  return std::abs(ub - lb) / scale;
}

struct Candidate {
  Assignment assignment;
  double mu = kInf;       // exact epigraph max_k cut_k(y)
  double energy = kInf;   // best sample energy decoding to it
  std::size_t reads = 0;  // samples decoding to it
};

enum class MasterMode { Sampled, Exact };

class BendersEngine {
 public:
  BendersEngine(const NetworkConfig& cfg, const SlotState& s, const QueueState& q, const SolverOptions& opt,
                MasterMode mode)
      : cfg_(cfg), s_(s), q_(q), opt_(opt), mode_(mode),
        mm_(MasterModel::build(cfg, s, opt.hard_energy_budget)), escalated_(opt.penalties) {
    opt.control.validate();
    sub_.V = opt.control.V;
    sub_.hard_energy_budget = opt.hard_energy_budget;
  }

  SolveResult run() {
    const auto& ctl = opt_.control;
    const std::size_t rho = mode_ == MasterMode::Exact ? 1 : ctl.cuts_per_iteration;
    std::vector<Assignment> batch = seeds(rho);
    double ub = kInf, lb = -kInf;
    for (std::size_t l = 1; l <= ctl.max_iterations; ++l) {
      IterationRecord rec;
      rec.l = l;
      auto t0 = std::chrono::steady_clock::now();
      for (const auto& y : batch) {
        if (!visited_.insert(y).second) continue;
        SubproblemSolution sol = solve_subproblem(cfg_, s_, y, q_, sub_);
        mm_.add_cut(make_cut(cfg_, s_, sol));
        ++rec.cuts_added;
        if (sol.phi < ub) {
          ub = sol.phi;
          incumbent_ = std::move(sol);
        }
      }
      rec.sub_ms = elapsed_ms(t0);
      rec.cuts_total = mm_.cuts.size();

      t0 = std::chrono::steady_clock::now();
      std::vector<Candidate> cands;
      bool confirmed = true;
      double floor = cut_floor(mm_);
      if (relative_gap(ub, std::max(lb, floor)) <= ctl.epsilon) {
        lb = std::max(lb, std::min(floor, ub));
      } else if (mode_ == MasterMode::Exact) {
        auto ms = solve_master_exact(mm_, opt_.size_cap);
        if (!ms.found) throw InfeasibleAssignment("master has no feasible assignment");
        lb = std::max(lb, std::min(ms.mu, ub));
        cands.push_back({ms.assignment, ms.mu, 0, 1});
      } else {
        cands = sample_master(l, ub, floor);
        double best = cands.front().mu;
        lb = std::max(lb, std::min(best, ub));
        for (std::size_t r = 0; r < opt_.max_resamples && relative_gap(ub, lb) <= ctl.epsilon &&
                                cands.front().reads < opt_.confirm_reads;
             ++r) {
          ++trace_.resamples;
          merge(cands, sample_master(l, ub, floor, r + 1));
          lb = std::max(lb, std::min(cands.front().mu, ub));
        }
        confirmed = cands.front().reads >= opt_.confirm_reads;
      }
      rec.master_ms = elapsed_ms(t0);
      rec.ub = ub;
      rec.lb = lb;
      rec.gap = relative_gap(ub, lb);
      trace_.iterations.push_back(rec);

      if (rec.gap <= ctl.epsilon) {
        trace_.reason = confirmed ? Termination::Gap : Termination::GapUnconfirmed;
        return finish();
      }
      batch.clear();
      for (const auto& c : cands) {
        if (batch.size() >= rho) break;
        if (!visited_.count(c.assignment)) batch.push_back(c.assignment);
      }
      if (batch.empty()) {
        trace_.reason = Termination::Stalled;
        return finish();
      }
    }
    trace_.reason = Termination::IterationLimit;
    return finish();
  }

 private:
  SolveResult finish() {
    SolveResult r;
    r.solution = std::move(*incumbent_);
    r.trace = std::move(trace_);
    r.evaluated = visited_.size();
    r.master = std::move(mm_);
    return r;
  }

  std::vector<Assignment> seeds(std::size_t rho) {
    std::vector<Assignment> out{initial_assignment(cfg_, s_, mm_)};
    std::mt19937_64 rng(stream_seed(opt_.anneal.seed, 0x7365656473ULL));
    std::vector<std::vector<Choice>> opts(mm_.users);
    for (std::size_t u = 0; u < mm_.users; ++u) opts[u] = mm_.options(u);
    for (std::size_t k = 1; k < rho; ++k) {
      for (int attempt = 0; attempt < 100; ++attempt) {
        std::vector<Choice> pick(mm_.users);
        for (std::size_t u = 0; u < mm_.users; ++u)
          pick[u] = opts[u][std::uniform_int_distribution<std::size_t>(0, opts[u].size() - 1)(rng)];
        Assignment a = Assignment::from_choices(pick, mm_.aps);
        if (mm_.feasible(a)) {
          out.push_back(std::move(a));
          break;
        }
      }
    }
    return out;
  }

  static void merge(std::vector<Candidate>& into, const std::vector<Candidate>& more) {
    for (const auto& c : more) {
      auto it = std::find_if(into.begin(), into.end(), [&](const Candidate& x) { return x.assignment == c.assignment; });
      if (it == into.end()) into.push_back(c);
      else {
        it->reads += c.reads;
        it->energy = std::min(it->energy, c.energy);
      }
    }
    rank(into);
  }

  static void rank(std::vector<Candidate>& c) {
    std::stable_sort(c.begin(), c.end(), [](const Candidate& a, const Candidate& b) {
      return a.mu < b.mu || (a.mu == b.mu && a.energy < b.energy);
    });
  }

  /// Steepest descent over single-user option changes on the exact epigraph.
  /// Cut values are updated per move, O(cuts) per trial.
  Candidate descend(Candidate c) const {
    std::vector<Choice> pick = c.assignment.choices();
    const std::size_t K = mm_.cuts.size();
    std::vector<double> val(K);
    for (std::size_t k = 0; k < K; ++k) val[k] = mm_.cuts[k].evaluate(c.assignment);
    for (bool improved = true; improved;) {
      improved = false;
      std::size_t best_u = 0;
      Choice best_o;
      double best_mu = c.mu;
      for (std::size_t u = 0; u < mm_.users; ++u) {
        Choice keep = pick[u];
        for (const Choice& o : mm_.options(u)) {
          if (o == keep) continue;
          double mu = -kInf;
          for (std::size_t k = 0; k < K; ++k)
            mu = std::max(mu, val[k] - mm_.cuts[k].term(u, keep) + mm_.cuts[k].term(u, o));
          if (mu >= best_mu - 1e-12) continue;
          pick[u] = o;
          bool ok = mm_.feasible(Assignment::from_choices(pick, mm_.aps));
          pick[u] = keep;
          if (ok) {
            best_mu = mu;
            best_u = u;
            best_o = o;
          }
        }
      }
      if (best_mu < c.mu - 1e-12) {
        for (std::size_t k = 0; k < K; ++k)
          val[k] += mm_.cuts[k].term(best_u, best_o) - mm_.cuts[k].term(best_u, pick[best_u]);
        pick[best_u] = best_o;
        c.mu = best_mu;
        c.reads = 0;
        improved = true;
      }
    }
    c.assignment = Assignment::from_choices(pick, mm_.aps);
    c.mu = mm_.epigraph(c.assignment);
    return c;
  }

  /// Compiles and samples the master, escalating penalties of violated
  /// families. Returns distinct feasible decodes ranked by exact epigraph.
  std::vector<Candidate> sample_master(std::size_t l, double ub, double floor, std::size_t resample = 0) {
    static const SimulatedAnnealer default_sampler;
    const Sampler& sampler = opt_.sampler ? *opt_.sampler : default_sampler;
    CompileOptions co;
    co.encoding = opt_.encoding;
    co.mu_floor = floor;
    co.mu_ceiling = ub;
    co.coefficient_cap = opt_.coefficient_cap;
    for (std::size_t attempt = 0;; ++attempt) {
      co.penalties = escalated_;
      QuboModel qm = compile_qubo(mm_, co);
      trace_.qubo_vars = qm.num_vars;
      AnnealParams ap = opt_.anneal;
      ap.seed = stream_seed(opt_.anneal.seed, l, resample * 16 + attempt + 1);
      auto samples = sampler.sample(qm, ap);

      std::map<Assignment, Candidate> pool;
      for (const auto& smp : samples) {
        auto d = decode_sample(qm, smp.bits);
        if (!mm_.feasible(d.assignment)) continue;
        auto [it, fresh] = pool.try_emplace(d.assignment);
        if (fresh) {
          it->second.assignment = d.assignment;
          it->second.mu = mm_.epigraph(d.assignment);
          it->second.energy = smp.energy;
        }
        ++it->second.reads;
      }
      auto best = decode_sample(qm, samples.front().bits);
      bool structural = std::any_of(best.violations.begin(), best.violations.end(),
                                    [](const Violation& v) { return v.family != Family::Cut; });
      bool escalate = attempt < opt_.max_escalations && (structural || pool.empty());
      if (escalate) {
        ++trace_.escalations;
        std::set<Family> hit;
        for (const auto& v : best.violations)
          if (v.family != Family::Cut) hit.insert(v.family);
        if (hit.empty())
          hit = {Family::Availability, Family::SingleAssociation, Family::SatelliteRelay, Family::OffloadConsistency};
        for (Family f : hit) escalated_[f] = 10.0 * qm.zeta[f];
        continue;
      }
      if (pool.empty()) throw NoFeasibleSample("master samples decode to no feasible assignment");
      std::vector<Candidate> out;
      for (auto& [a, c] : pool) out.push_back(std::move(c));
      if (opt_.polish) {
        std::vector<Candidate> extra;
        for (const auto& c : out) {
          Candidate d = descend(c);
          if (!pool.count(d.assignment)) {
            pool.emplace(d.assignment, d);
            extra.push_back(d);
          }
        }
        out.insert(out.end(), extra.begin(), extra.end());
      }
      rank(out);
      return out;
    }
  }

  const NetworkConfig& cfg_;
  const SlotState& s_;
  const QueueState& q_;
  SolverOptions opt_;
  MasterMode mode_;
  MasterModel mm_;
  SubproblemOptions sub_;
  std::set<Assignment> visited_;
  std::optional<SubproblemSolution> incumbent_;
  SolveTrace trace_;
  PenaltyWeights escalated_;
};

}  // namespace detail

inline SolveResult solve_slot_multi_cut(const NetworkConfig& cfg, const SlotState& s, const QueueState& q,
                                        const SolverOptions& opt) {
  return detail::BendersEngine(cfg, s, q, opt, detail::MasterMode::Sampled).run();
}

inline SolveResult solve_slot_single_cut(const NetworkConfig& cfg, const SlotState& s, const QueueState& q,
                                         SolverOptions opt) {
  opt.control.cuts_per_iteration = 1;
  return solve_slot_multi_cut(cfg, s, q, opt);
}

inline SolveResult solve_slot_classical_gbd(const NetworkConfig& cfg, const SlotState& s, const QueueState& q,
                                            const SolverOptions& opt) {
  return detail::BendersEngine(cfg, s, q, opt, detail::MasterMode::Exact).run();
}

}  // namespace satin
