// Convex continuous subproblem for fixed binaries, its multipliers, and the
// Benders cut built from them.
//
// For fixed (alpha, z) the problem separates per AP into a bandwidth stage
// (minimize sum V c_u / beta_u s.t. sum beta <= 1 and the box) and a CPU stage
// (minimize sum V w_u / f_u + Q kappa w_u f_u^2 s.t. sum f <= F and the box).
// Delay constraints are tight at any optimum and are imposed at equality.
// Each stage is solved by bisection on the capacity multiplier with a
// closed-form (bandwidth) or scalar-Newton (CPU) inner response.
//
// The cut dualizes only the per-AP coupling constraints (bandwidth and CPU
// capacity, plus the per-slot energy budget in hard-budget mode). The
// remaining Lagrangian separates over (user, AP) pairs, so its minimum over
// the continuous variables is a sum of per-pair functions of (alpha_um, z_um)
// and is exactly representable as c0 + a*alpha + b*z + q*alpha*z. Weak
// duality makes it a valid lower bound of the subproblem value at every
// binary point; at the generating point it is tight.
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "satin/lyapunov.hpp"
#include "satin/scenario.hpp"

namespace satin {

struct SubproblemOptions {
  double V = 10.0;
  /// Myopic mode: enforce sum_u e_um <= ebar_m in the slot itself.
  bool hard_energy_budget = false;
  double bisection_rel_tol = 1e-13;
};

/// Multipliers of the per-AP coupling constraints.
struct ApDuals {
  double bandwidth_price = 0;  // on sum_u beta_um <= 1
  double cpu_price = 0;        // on sum_u f_um <= F_m
  double energy_price = 0;     // on sum_u e_um <= ebar_m (hard-budget mode only)
};

/// Multipliers of the per-pair box and delay constraints, recovered from
/// stationarity.
struct PairDuals {
  double beta_lower = 0, beta_upper = 0;
  double f_lower = 0, f_upper = 0;
  double uplink = 0, onboard = 0, relay = 0, cloud = 0;
};

/// Scaled KKT residuals (dimensionless).
struct KktReport {
  double stationarity = 0;
  double primal = 0;
  double dual = 0;
  double complementarity = 0;
  double max() const { return std::max({stationarity, primal, dual, complementarity}); }
  void absorb(const KktReport& o) {
    stationarity = std::max(stationarity, o.stationarity);
    primal = std::max(primal, o.primal);
    dual = std::max(dual, o.dual);
    complementarity = std::max(complementarity, o.complementarity);
  }
};

struct SubproblemSolution {
  Assignment assignment;
  Allocation allocation;
  std::vector<ApDuals> ap_duals;
  Grid<PairDuals> pair_duals;
  double phi = 0;                  // Phi at the optimum
  double total_delay = 0;
  std::vector<double> ap_energy;
  KktReport kkt;
  std::vector<double> queue;       // backlogs the solve was priced with
  SubproblemOptions options;
};

namespace detail {

/// argmin over beta in [lo, hi] of weight / beta + price * beta.
inline double bandwidth_response(double weight, double price, double lo, double hi) {
  if (weight <= 0) return price > 0 ? lo : hi;
  if (price <= 0) return hi;
  return std::clamp(std::sqrt(weight / price), lo, hi);
}

/// argmin over f in [lo, hi] of V w / f + qk w f^2 + price f, where qk is the
/// energy price times kappa. Stationarity: 2 qk w f^3 + price f^2 - V w = 0.
inline double cpu_response(double Vw, double qkw, double price, double lo, double hi) {
  auto g = [&](double f) { return 2.0 * qkw * f * f * f + price * f * f - Vw; };
  if (g(hi) <= 0) return hi;
  if (lo > 0 && g(lo) >= 0) return lo;
  if (lo <= 0 && Vw <= 0) return lo;
  double a = lo, b = hi;
  double f = 0.5 * (a + b);
  for (int it = 0; it < 200; ++it) {
    double gf = g(f);
    if (gf > 0) b = f; else a = f;
    double dg = 6.0 * qkw * f * f + 2.0 * price * f;
    double next = dg > 0 ? f - gf / dg : 0.5 * (a + b);
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    if (std::abs(next - f) <= 1e-15 * f) {
      f = next;
      break;
    }
    f = next;
  }
  return std::clamp(f, lo, hi);
}

struct StageResult {
  double price = 0;
  std::vector<double> x;
  bool feasible = true;
};

/// Finds the smallest price >= 0 with sum_i response(i, price) <= cap.
template <typename Response>
double capacity_price(std::size_t n, double cap, Response&& response, double hint, double rel_tol) {
  auto total = [&](double p) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += response(i, p);
    return s;
  };
  if (total(0.0) <= cap) return 0.0;
  double hi = std::max(hint, 1e-300);
  while (total(hi) > cap) {
    hi *= 4.0;
    if (!std::isfinite(hi)) return hi;
  }
  double lo = 0.0;
  while (hi - lo > rel_tol * hi) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (total(mid) > cap) lo = mid; else hi = mid;
  }
  return hi;
}

inline StageResult solve_bandwidth(double V, const std::vector<double>& upload, double lo, double hi,
                                   double rel_tol) {
  StageResult r;
  const std::size_t n = upload.size();
  r.x.assign(n, 0.0);
  if (n == 0) return r;
  if (static_cast<double>(n) * lo > 1.0 + 1e-12) {
    r.feasible = false;
    return r;
  }
  if (V <= 0) {
    for (auto& b : r.x) b = std::clamp(1.0 / static_cast<double>(n), lo, hi);
    return r;
  }
  auto resp = [&](std::size_t i, double p) { return bandwidth_response(V * upload[i], p, lo, hi); };
  double hint = 0;
  for (double c : upload) hint = std::max(hint, V * c / std::max(lo * lo, 1e-300));
  if (lo <= 0) {
    hint = 0;
    for (double c : upload) hint = std::max(hint, V * c);
  }
  double p = capacity_price(n, 1.0, resp, hint, rel_tol);
  // Polish with the closed form on the free set.
  if (p > 0) {
    double free_root = 0, clipped = 0;
    bool any_free = false;
    for (std::size_t i = 0; i < n; ++i) {
      double b = resp(i, p);
      if (b > lo && b < hi) {
        any_free = true;
        free_root += std::sqrt(V * upload[i]);
      } else {
        clipped += b;
      }
    }
    if (any_free && clipped < 1.0) {
      double cand = free_root * free_root / ((1.0 - clipped) * (1.0 - clipped));
      double s = 0;
      bool same = true;
      for (std::size_t i = 0; i < n; ++i) {
        double b0 = resp(i, p), b1 = resp(i, cand);
        same = same && ((b0 > lo && b0 < hi) == (b1 > lo && b1 < hi));
        s += b1;
      }
      if (same && s <= 1.0 + 1e-14) p = cand;
    }
  }
  r.price = p;
  for (std::size_t i = 0; i < n; ++i) r.x[i] = resp(i, p);
  return r;
}

inline StageResult solve_cpu(double V, double energy_price, double kappa,
                             const std::vector<double>& work, double capacity, double lo, double hi,
                             double rel_tol) {
  StageResult r;
  const std::size_t n = work.size();
  r.x.assign(n, 0.0);
  if (n == 0) return r;
  if (static_cast<double>(n) * lo > capacity * (1.0 + 1e-12)) {
    r.feasible = false;
    return r;
  }
  const double qk = energy_price * kappa;
  auto resp = [&](std::size_t i, double p) { return cpu_response(V * work[i], qk * work[i], p, lo, hi); };
  double hint = 0;
  for (double w : work) hint = std::max(hint, lo > 0 ? V * w / (lo * lo) : V * w / (hi * hi));
  r.price = capacity_price(n, capacity, resp, hint, rel_tol);
  for (std::size_t i = 0; i < n; ++i) r.x[i] = resp(i, r.price);
  return r;
}

/// Per-AP membership for a fixed assignment.
struct ApMembers {
  std::vector<std::size_t> associated;  // U1m
  std::vector<std::size_t> onboard;     // U2m (subset of U1m)
  std::vector<std::size_t> relayed;     // U1m \ U2m
};

inline std::vector<ApMembers> members(const Assignment& a) {
  std::vector<ApMembers> out(a.aps());
  for (std::size_t u = 0; u < a.users(); ++u)
    for (std::size_t m = 0; m < a.aps(); ++m)
      if (a.alpha(u, m)) {
        out[m].associated.push_back(u);
        (a.z(u, m) ? out[m].onboard : out[m].relayed).push_back(u);
      }
  return out;
}

inline void check_binaries(const NetworkConfig& cfg, const SlotState& s, const Assignment& a) {
  for (std::size_t u = 0; u < s.users(); ++u) {
    int n = 0;
    for (std::size_t m = 0; m < s.aps(); ++m) {
      n += a.alpha(u, m);
      if (a.alpha(u, m) && !s.available(u, m))
        throw InfeasibleAssignment("association with an unavailable AP");
      if (a.z(u, m) && !a.alpha(u, m)) throw InfeasibleAssignment("z without alpha");
      if (a.z(u, m) && !cfg.aps[m].computes()) throw InfeasibleAssignment("onboard compute on satellite");
    }
    if (n > 1) throw InfeasibleAssignment("user associated with several APs");
    if (n == 0 && s.user_active(u)) throw InfeasibleAssignment("active user left unassociated");
  }
}

}  // namespace detail

/// Solution of one AP's share of the subproblem.
struct ApSolution {
  bool feasible = true;
  ApDuals duals;
  std::vector<double> beta;  // aligned with members.associated
  std::vector<double> f;     // aligned with members.onboard
  double delay = 0;          // sum of the four delay families
  double energy = 0;
  double value = 0;          // V * delay + Q * energy (no -Q ebar term)
};

/// Solves one AP's stages. Pure; used both by the full subproblem and by the
/// enumeration oracle's per-AP memo.
inline ApSolution solve_ap(const NetworkConfig& cfg, const SlotState& s, std::size_t m,
                           const detail::ApMembers& mem, double queue, const SubproblemOptions& opt) {
  const auto& ap = cfg.aps[m];
  ApSolution out;
  std::vector<double> upload, work;
  for (auto u : mem.associated) upload.push_back(full_band_upload_s(cfg, s, u, m));
  for (auto u : mem.onboard) work.push_back(s.workload(u));

  auto bw = detail::solve_bandwidth(opt.V, upload, ap.beta_min, ap.beta_max, opt.bisection_rel_tol);
  if (!bw.feasible) {
    out.feasible = false;
    return out;
  }
  double relay_energy = 0, relay_delay = 0;
  for (auto u : mem.relayed) {
    relay_energy += ap.tx_power_w() * s.data_bits[u] / ap.backhaul_bps;
    relay_delay += s.data_bits[u] / ap.backhaul_bps + s.workload(u) / cfg.cloud_cpu_hz;
  }

  auto cpu_at = [&](double energy_price) {
    return detail::solve_cpu(opt.V, energy_price, ap.switched_capacitance, work, ap.max_cpu_hz,
                             ap.f_min_hz, ap.f_cap(), opt.bisection_rel_tol);
  };
  auto compute_energy = [&](const detail::StageResult& c) {
    double e = 0;
    for (std::size_t i = 0; i < work.size(); ++i) e += ap.switched_capacitance * c.x[i] * c.x[i] * work[i];
    return e;
  };

  double theta = 0;
  detail::StageResult cpu = cpu_at(queue);
  if (!cpu.feasible) {
    out.feasible = false;
    return out;
  }
  if (opt.hard_energy_budget) {
    double floor_energy = relay_energy;
    for (double w : work) floor_energy += ap.switched_capacitance * ap.f_min_hz * ap.f_min_hz * w;
    if (floor_energy > ap.energy_budget_j * (1 + 1e-12)) {
      out.feasible = false;
      return out;
    }
    if (relay_energy + compute_energy(cpu) > ap.energy_budget_j) {
      double lo = 0, hi = std::max(1.0, queue);
      while (relay_energy + compute_energy(cpu_at(queue + hi)) > ap.energy_budget_j) {
        hi *= 4;
        if (hi > 1e300) break;
      }
      while (hi - lo > opt.bisection_rel_tol * hi) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (relay_energy + compute_energy(cpu_at(queue + mid)) > ap.energy_budget_j) lo = mid; else hi = mid;
      }
      theta = hi;
      cpu = cpu_at(queue + theta);
    }
  }

  out.duals = {bw.price, cpu.price, theta};
  out.beta = bw.x;
  out.f = cpu.x;
  double delay = relay_delay;
  for (std::size_t i = 0; i < upload.size(); ++i) delay += upload[i] / bw.x[i];
  for (std::size_t i = 0; i < work.size(); ++i) delay += work[i] / cpu.x[i];
  out.delay = delay;
  out.energy = relay_energy + compute_energy(cpu);
  out.value = opt.V * delay + queue * out.energy;
  return out;
}

/// Minimum-energy screen for hard-budget mode: relay energy plus onboard
/// energy at f_min must fit the budget.
inline bool energy_screen_ok(const NetworkConfig& cfg, const SlotState& s, const Assignment& a) {
  auto mem = detail::members(a);
  for (std::size_t m = 0; m < s.aps(); ++m) {
    const auto& ap = cfg.aps[m];
    double e = 0;
    for (auto u : mem[m].relayed) e += ap.tx_power_w() * s.data_bits[u] / ap.backhaul_bps;
    for (auto u : mem[m].onboard) e += ap.switched_capacitance * ap.f_min_hz * ap.f_min_hz * s.workload(u);
    if (e > ap.energy_budget_j * (1 + 1e-12)) return false;
  }
  return true;
}

/// Box-minimum screen: sum of beta_min and f_min must fit each AP's capacity.
inline bool capacity_screen_ok(const NetworkConfig& cfg, const Assignment& a) {
  for (std::size_t m = 0; m < a.aps(); ++m) {
    std::size_t n1 = 0, n2 = 0;
    for (std::size_t u = 0; u < a.users(); ++u) {
      n1 += a.alpha(u, m);
      n2 += a.z(u, m);
    }
    const auto& ap = cfg.aps[m];
    if (static_cast<double>(n1) * ap.beta_min > 1.0 + 1e-12) return false;
    if (n2 > 0 && static_cast<double>(n2) * ap.f_min_hz > ap.max_cpu_hz * (1.0 + 1e-12)) return false;
  }
  return true;
}

namespace detail {

inline KktReport ap_kkt(const NetworkConfig& cfg, const SlotState& s, std::size_t m,
                        const ApMembers& mem, const ApSolution& sol, double queue,
                        const SubproblemOptions& opt, Grid<PairDuals>& pd) {
  const auto& ap = cfg.aps[m];
  KktReport k;
  const double V = opt.V;
  const double lam = sol.duals.bandwidth_price, eta = sol.duals.cpu_price;
  const double price = queue + sol.duals.energy_price;
  auto rel = [](double r, double scale) { return scale > 0 ? std::abs(r) / scale : std::abs(r); };

  double bw_obj = 0, sum_beta = 0;
  for (std::size_t i = 0; i < mem.associated.size(); ++i) {
    std::size_t u = mem.associated[i];
    double c = full_band_upload_s(cfg, s, u, m), b = sol.beta[i];
    double grad = -V * c / (b * b) + lam;  // d/dbeta of V c / beta + lam beta
    double scale = V * c / (b * b) + lam;
    bw_obj += V * c / b;
    sum_beta += b;
    auto& d = pd(u, m);
    d.uplink = V;
    bool at_lo = b <= ap.beta_min * (1 + 1e-12), at_hi = b >= ap.beta_max * (1 - 1e-12);
    if (V > 0 && at_hi && grad <= 0) d.beta_upper = -grad;
    else if (V > 0 && at_lo && grad >= 0) d.beta_lower = grad;
    else if (V > 0) k.stationarity = std::max(k.stationarity, rel(grad, scale));
    k.dual = std::max(k.dual, rel(std::min({0.0, d.beta_upper, d.beta_lower}), scale));
    k.primal = std::max(k.primal, std::max(0.0, ap.beta_min - b) + std::max(0.0, b - ap.beta_max));
  }
  if (!mem.associated.empty()) {
    k.primal = std::max(k.primal, std::max(0.0, sum_beta - 1.0));
    k.complementarity = std::max(k.complementarity, rel(lam * (1.0 - sum_beta), bw_obj + lam));
  }

  double cpu_obj = 0, sum_f = 0, e = 0;
  for (std::size_t i = 0; i < mem.onboard.size(); ++i) {
    std::size_t u = mem.onboard[i];
    double w = s.workload(u), f = sol.f[i];
    double grad = -V * w / (f * f) + 2.0 * price * ap.switched_capacitance * w * f + eta;
    double scale = V * w / (f * f) + 2.0 * price * ap.switched_capacitance * w * f + eta;
    cpu_obj += V * w / f + price * ap.switched_capacitance * w * f * f;
    sum_f += f;
    e += ap.switched_capacitance * f * f * w;
    auto& d = pd(u, m);
    d.onboard = V;
    bool at_lo = f <= ap.f_min_hz * (1 + 1e-12), at_hi = f >= ap.f_cap() * (1 - 1e-12);
    if (at_hi && grad <= 0) d.f_upper = -grad;
    else if (at_lo && grad >= 0) d.f_lower = grad;
    else k.stationarity = std::max(k.stationarity, rel(grad, scale));
    k.primal = std::max(k.primal, (std::max(0.0, ap.f_min_hz - f) + std::max(0.0, f - ap.f_cap())) / ap.f_cap());
  }
  for (auto u : mem.relayed) {
    auto& d = pd(u, m);
    d.relay = V + price * ap.tx_power_w();
    d.cloud = V;
    e += ap.tx_power_w() * s.data_bits[u] / ap.backhaul_bps;
  }
  if (!mem.onboard.empty()) {
    k.primal = std::max(k.primal, std::max(0.0, sum_f - ap.max_cpu_hz) / ap.max_cpu_hz);
    k.complementarity =
        std::max(k.complementarity, rel(eta * (ap.max_cpu_hz - sum_f), cpu_obj + eta * ap.max_cpu_hz));
  }
  if (opt.hard_energy_budget) {
    double th = sol.duals.energy_price;
    k.primal = std::max(k.primal, std::max(0.0, e - ap.energy_budget_j) / ap.energy_budget_j);
    k.complementarity = std::max(
        k.complementarity, rel(th * (ap.energy_budget_j - e), cpu_obj + bw_obj + th * ap.energy_budget_j));
  }
  return k;
}

}  // namespace detail

/// Solves the continuous subproblem for a fixed assignment. Throws
/// InfeasibleAssignment if the binaries break their own invariants or the box
/// minima exceed a capacity (or, in hard-budget mode, the energy budget).
inline SubproblemSolution solve_subproblem(const NetworkConfig& cfg, const SlotState& s,
                                           const Assignment& a, const QueueState& q,
                                           const SubproblemOptions& opt) {
  detail::check_binaries(cfg, s, a);
  const std::size_t U = s.users(), M = s.aps();
  auto mem = detail::members(a);
  SubproblemSolution sol;
  sol.assignment = a;
  sol.options = opt;
  sol.queue = q.backlog;
  sol.ap_duals.resize(M);
  sol.pair_duals = Grid<PairDuals>(U, M);
  sol.ap_energy.assign(M, 0.0);
  Grid<double> beta(U, M, 0.0), f(U, M, 0.0);

  for (std::size_t m = 0; m < M; ++m) {
    ApSolution ap = solve_ap(cfg, s, m, mem[m], q[m], opt);
    if (!ap.feasible)
      throw InfeasibleAssignment("AP " + std::to_string(m) + ": box minima or budget exceed capacity");
    sol.ap_duals[m] = ap.duals;
    for (std::size_t i = 0; i < mem[m].associated.size(); ++i) beta(mem[m].associated[i], m) = ap.beta[i];
    for (std::size_t i = 0; i < mem[m].onboard.size(); ++i) f(mem[m].onboard[i], m) = ap.f[i];
    sol.kkt.absorb(detail::ap_kkt(cfg, s, m, mem[m], ap, q[m], opt, sol.pair_duals));
  }
  sol.allocation = complete_allocation(cfg, s, a, beta, f);
  ServiceOutcome o = service_delay(cfg, s, a, sol.allocation, false);
  sol.total_delay = o.total_delay;
  sol.ap_energy = o.ap_energy;
  sol.phi = opt.V * o.total_delay;
  for (std::size_t m = 0; m < M; ++m) sol.phi += q[m] * (o.ap_energy[m] - cfg.aps[m].energy_budget_j);
  return sol;
}

/// mu >= c0 + sum a*alpha + b*z + q*alpha*z.
struct BendersCut {
  double constant = 0;
  Grid<double> a, b, q;
  Assignment origin;
  double origin_value = 0;

  double evaluate(const Assignment& y) const {
    double v = constant;
    for (std::size_t u = 0; u < y.users(); ++u)
      for (std::size_t m = 0; m < y.aps(); ++m) {
        double al = y.alpha(u, m), zz = y.z(u, m);
        v += a(u, m) * al + b(u, m) * zz + q(u, m) * al * zz;
      }
    return v;
  }

  /// Contribution of one user's choice.
  double term(std::size_t u, const Choice& c) const {
    if (c.ap < 0) return 0;
    auto m = static_cast<std::size_t>(c.ap);
    return a(u, m) + (c.local ? b(u, m) + q(u, m) : 0.0);
  }
};

/// Builds the cut from a converged subproblem solution.
inline BendersCut make_cut(const NetworkConfig& cfg, const SlotState& s, const SubproblemSolution& sol) {
  const std::size_t U = s.users(), M = s.aps();
  const double V = sol.options.V;
  BendersCut cut;
  cut.a = Grid<double>(U, M, 0.0);
  cut.b = Grid<double>(U, M, 0.0);
  cut.q = Grid<double>(U, M, 0.0);
  cut.origin = sol.assignment;
  cut.origin_value = sol.phi;
  for (std::size_t m = 0; m < M; ++m) {
    const auto& ap = cfg.aps[m];
    const auto& d = sol.ap_duals[m];
    const double price = sol.queue[m] + d.energy_price;
    cut.constant -= d.bandwidth_price + (sol.queue[m] + d.energy_price) * ap.energy_budget_j;
    if (ap.computes()) cut.constant -= d.cpu_price * ap.max_cpu_hz;
    for (std::size_t u = 0; u < U; ++u) {
      if (!s.available(u, m)) continue;
      double c = full_band_upload_s(cfg, s, u, m);
      double beta = detail::bandwidth_response(V * c, d.bandwidth_price, ap.beta_min, ap.beta_max);
      double uplink = V * c / beta + d.bandwidth_price * beta;
      double relay_s = s.data_bits[u] / ap.backhaul_bps;
      double cloud = V * (relay_s + s.workload(u) / cfg.cloud_cpu_hz) + price * ap.tx_power_w() * relay_s;
      cut.a(u, m) = uplink + cloud;
      if (ap.computes()) {
        double w = s.workload(u);
        double f = detail::cpu_response(V * w, price * ap.switched_capacitance * w, d.cpu_price, ap.f_min_hz,
                                        ap.f_cap());
        double onboard = V * w / f + price * ap.switched_capacitance * w * f * f + d.cpu_price * f;
        cut.b(u, m) = onboard;
        cut.q(u, m) = -cloud;
      }
    }
  }
  return cut;
}

}  // namespace satin
