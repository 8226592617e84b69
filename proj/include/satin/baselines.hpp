// Comparison schemes: strongest-signal association with equal sharing, and a
// myopic controller that ignores the queues but enforces the energy budget
// in every slot.
#pragma once

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "satin/hqcgbd.hpp"

namespace satin {

struct BaselineResult {
  Assignment assignment;
  Allocation allocation;
  ServiceOutcome outcome;
  bool fallback = false;       // myopic: every assignment failed the screens
  SolveTrace trace;            // myopic only
};

namespace detail {

/// Shares `total` among n entries equally, clipped to [lo, hi]. All entries
/// share one box, so the clipped equal share is already the water level.
inline std::vector<double> level_shares(std::size_t n, double total, double lo, double hi) {
  std::vector<double> x(n, 0.0);
  if (n == 0) return x;
  double dn = static_cast<double>(n);
  if (dn * lo >= total) {
    std::fill(x.begin(), x.end(), total / dn);  // box minima do not fit; renormalize
    return x;
  }
  if (dn * hi <= total) {
    std::fill(x.begin(), x.end(), hi);
    return x;
  }
  std::fill(x.begin(), x.end(), std::clamp(total / dn, lo, hi));
  return x;
}

}  // namespace detail

/// Strongest-signal association; each computing AP runs a uniformly random
/// subset of its users onboard, sized to the largest count whose f_min fits.
inline BaselineResult heuristic_slot(const NetworkConfig& cfg, const SlotState& s, std::uint64_t seed,
                                     bool allow_onboard = true) {
  const std::size_t U = s.users(), M = s.aps();
  std::mt19937_64 rng(stream_seed(seed, 0x68657572ULL, s.t + 1));
  BaselineResult r;
  r.assignment = Assignment(U, M);
  std::vector<std::vector<std::size_t>> members(M);
  for (std::size_t u = 0; u < U; ++u) {
    int m = strongest_ap(cfg, s, u);
    if (m < 0) continue;
    r.assignment.alpha(u, static_cast<std::size_t>(m)) = 1;
    members[static_cast<std::size_t>(m)].push_back(u);
  }
  Grid<double> beta(U, M, 0.0), f(U, M, 0.0);
  for (std::size_t m = 0; m < M; ++m) {
    const auto& ap = cfg.aps[m];
    auto& mem = members[m];
    auto b = detail::level_shares(mem.size(), 1.0, ap.beta_min, ap.beta_max);
    for (std::size_t i = 0; i < mem.size(); ++i) beta(mem[i], m) = b[i];
    if (!ap.computes() || !allow_onboard || mem.empty()) continue;
    std::size_t quota = ap.f_min_hz > 0
                            ? std::min(mem.size(), static_cast<std::size_t>(ap.max_cpu_hz * (1 + 1e-12) / ap.f_min_hz))
                            : mem.size();
    std::vector<std::size_t> pool = mem;
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(quota);
    std::sort(pool.begin(), pool.end());
    auto fs = detail::level_shares(pool.size(), ap.max_cpu_hz, ap.f_min_hz, ap.f_cap());
    for (std::size_t i = 0; i < pool.size(); ++i) {
      r.assignment.z(pool[i], m) = 1;
      f(pool[i], m) = fs[i];
    }
  }
  r.allocation = complete_allocation(cfg, s, r.assignment, beta, f);
  r.outcome = service_delay(cfg, s, r.assignment, r.allocation, false);
  return r;
}

/// Minimizes V * delay under hard per-slot energy budgets with the exact
/// Benders engine. Queues are ignored. When no assignment passes the energy
/// screen, falls back to strongest-signal association with all tasks relayed.
inline BaselineResult myopic_slot(const NetworkConfig& cfg, const SlotState& s, SolverOptions opt) {
  opt.hard_energy_budget = true;
  QueueState zero(s.aps());
  BaselineResult r;
  try {
    auto sol = solve_slot_classical_gbd(cfg, s, zero, opt);
    r.assignment = sol.assignment();
    r.allocation = sol.allocation();
    r.trace = std::move(sol.trace);
  } catch (const InfeasibleAssignment&) {
    auto h = heuristic_slot(cfg, s, opt.anneal.seed, false);
    h.fallback = true;
    return h;
  }
  r.outcome = service_delay(cfg, s, r.assignment, r.allocation);
  return r;
}

}  // namespace satin
