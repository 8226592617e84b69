// Virtual energy queues, the per-slot drift-plus-penalty objective and the
// constants of the performance bound.
#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "satin/scenario.hpp"

namespace satin {

/// Joule backlog per AP. Budgets are per slot, so Q has units of J.
struct QueueState {
  std::vector<double> backlog;
  std::size_t t = 0;

  QueueState() = default;
  explicit QueueState(std::size_t aps) : backlog(aps, 0.0) {}

  double operator[](std::size_t m) const { return backlog[m]; }
  std::size_t size() const { return backlog.size(); }

  /// L(t) = 1/2 sum Q_m^2.
  double lyapunov() const {
    double l = 0;
    for (double q : backlog) l += q * q;
    return 0.5 * l;
  }
};

struct ControlParams {
  double V = 10.0;                 // delay weight
  double epsilon = 1e-3;           // relative gap tolerance
  std::size_t max_iterations = 50; // L_max
  std::size_t cuts_per_iteration = 5;  // rho

  void validate() const {
    if (!(V >= 0)) throw ConfigError("V: must be >= 0");
    if (!(epsilon >= 0 && epsilon < 1)) throw ConfigError("epsilon: must lie in [0,1)");
    if (max_iterations < 1) throw ConfigError("max_iterations: must be >= 1");
    if (cuts_per_iteration < 1) throw ConfigError("cuts_per_iteration: must be >= 1");
  }
};

/// Q'_m = max(Q_m + sum_u e_um - ebar_m, 0).
inline QueueState update_queue(const QueueState& q, std::span<const double> ap_energy,
                               std::span<const double> budget) {
  QueueState next = q;
  for (std::size_t m = 0; m < q.size(); ++m)
    next.backlog[m] = std::max(q.backlog[m] + ap_energy[m] - budget[m], 0.0);
  next.t = q.t + 1;
  return next;
}

inline std::vector<double> energy_budgets(const NetworkConfig& cfg) {
  std::vector<double> b;
  for (const auto& ap : cfg.aps) b.push_back(ap.energy_budget_j);
  return b;
}

/// Phi = V * sum_u O_u + sum_m Q_m (sum_u e_um - ebar_m). The -Q ebar term is
/// constant per slot but kept so values compare against the bound directly.
inline double drift_penalty_value(const NetworkConfig& cfg, const SlotState& s,
                                  const Assignment& a, const Allocation& x, const QueueState& q,
                                  double V) {
  ServiceOutcome o = service_delay(cfg, s, a, x);
  double phi = V * o.total_delay;
  for (std::size_t m = 0; m < s.aps(); ++m)
    phi += q[m] * (o.ap_energy[m] - cfg.aps[m].energy_budget_j);
  return phi;
}

/// C* = 1/2 sum_m ((sum_u E_um)^2 + ebar_m^2) given the per-AP sums.
inline double c_star_from_terms(std::span<const double> energy_sum, std::span<const double> budget) {
  double c = 0;
  for (std::size_t m = 0; m < energy_sum.size(); ++m)
    c += energy_sum[m] * energy_sum[m] + budget[m] * budget[m];
  return 0.5 * c;
}

/// Worst-case per-task AP energy: max(relay energy, onboard energy at f_max),
/// evaluated at the upper ends of the task distributions.
inline double worst_case_task_energy(const NetworkConfig& cfg, std::size_t m) {
  const auto& ap = cfg.aps[m];
  double relay = ap.tx_power_w() * cfg.data_bits_max / ap.backhaul_bps;
  if (!ap.computes()) return relay;
  double onboard =
      ap.switched_capacitance * ap.f_max_hz * ap.f_max_hz * cfg.data_bits_max * cfg.cycles_per_bit_max;
  return std::max(relay, onboard);
}

inline double c_star(const NetworkConfig& cfg) {
  std::vector<double> sums, budgets;
  for (std::size_t m = 0; m < cfg.ap_count(); ++m) {
    sums.push_back(static_cast<double>(cfg.user_count) * worst_case_task_energy(cfg, m));
    budgets.push_back(cfg.aps[m].energy_budget_j);
  }
  return c_star_from_terms(sums, budgets);
}

}  // namespace satin
