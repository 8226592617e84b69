// Exhaustive reference: solve the subproblem for every feasible assignment
// and keep the best. Per-AP values are memoized on the AP's member sets.
#pragma once

#include <unordered_map>
#include <utility>
#include <vector>

#include "satin/master.hpp"
#include "satin/subproblem.hpp"

namespace satin {

struct OracleOptions {
  double V = 10.0;
  bool hard_energy_budget = false;
  bool keep_table = false;
  double size_cap = 1048576.0;
};

struct OracleResult {
  SubproblemSolution solution;  // at the best assignment
  double phi = kInf;
  std::size_t enumerated = 0;   // feasible assignments evaluated
  std::size_t screened = 0;     // skipped by the capacity/energy screens
  std::vector<std::pair<Assignment, double>> table;

  const Assignment& assignment() const { return solution.assignment; }
  const Allocation& allocation() const { return solution.allocation; }
};

inline OracleResult enumerate_optimal(const NetworkConfig& cfg, const SlotState& s, const QueueState& q,
                                      const OracleOptions& opt) {
  const std::size_t U = s.users(), M = s.aps();
  if (U > 63) throw SizeCapExceeded("oracle: at most 63 users");
  MasterModel mm = MasterModel::build(cfg, s, opt.hard_energy_budget);
  SubproblemOptions sub;
  sub.V = opt.V;
  sub.hard_energy_budget = opt.hard_energy_budget;

  struct Key {
    std::size_t m;
    std::uint64_t assoc, onboard;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      return static_cast<std::size_t>(stream_seed(k.assoc, k.onboard, k.m));
    }
  };
  std::unordered_map<Key, double, KeyHash> memo;
  double budget_term = 0;
  for (std::size_t m = 0; m < M; ++m) budget_term += q[m] * cfg.aps[m].energy_budget_j;

  auto ap_value = [&](std::size_t m, std::uint64_t assoc, std::uint64_t onboard) {
    Key key{m, assoc, onboard};
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    detail::ApMembers mem;
    for (std::size_t u = 0; u < U; ++u) {
      if (!(assoc >> u & 1)) continue;
      mem.associated.push_back(u);
      ((onboard >> u & 1) ? mem.onboard : mem.relayed).push_back(u);
    }
    ApSolution a = solve_ap(cfg, s, m, mem, q[m], sub);
    double v = a.feasible ? a.value : kInf;
    memo.emplace(key, v);
    return v;
  };

  OracleResult r;
  Assignment best;
  std::vector<std::uint64_t> assoc(M), onboard(M);
  r.screened = for_each_feasible(
      mm,
      [&](const Assignment& a) {
        std::fill(assoc.begin(), assoc.end(), 0);
        std::fill(onboard.begin(), onboard.end(), 0);
        for (std::size_t u = 0; u < U; ++u)
          for (std::size_t m = 0; m < M; ++m) {
            assoc[m] |= std::uint64_t{a.alpha(u, m)} << u;
            onboard[m] |= std::uint64_t{a.z(u, m)} << u;
          }
        double phi = -budget_term;
        for (std::size_t m = 0; m < M; ++m) phi += ap_value(m, assoc[m], onboard[m]);
        ++r.enumerated;
        if (opt.keep_table) r.table.push_back({a, phi});
        if (phi < r.phi) {
          r.phi = phi;
          best = a;
        }
      },
      opt.size_cap);
  if (!std::isfinite(r.phi)) throw InfeasibleAssignment("oracle: no feasible assignment");
  r.solution = solve_subproblem(cfg, s, best, q, sub);
  return r;
}

}  // namespace satin
