// Network definition, per-slot randomness and physical-layer formulas.
#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "satin/assignment.hpp"
#include "satin/common.hpp"

namespace satin {

enum class Tier { BaseStation, Hap, Satellite };

inline const char* tier_name(Tier t) {
  switch (t) {
    case Tier::BaseStation: return "bs";
    case Tier::Hap: return "hap";
    case Tier::Satellite: return "satellite";
  }
  return "?";
}

struct Position {
  double x = 0, y = 0, z = 0;  // metres
};

struct ApProfile {
  Tier tier = Tier::BaseStation;
  double bandwidth_hz = 10e6;
  double tx_power_dbm = 41;
  double max_cpu_hz = 6e9;            // F_m, shared by all onboard tasks
  double switched_capacitance = 1e-28;
  double beta_min = 0.05;
  double beta_max = 1.0;
  double f_min_hz = 0.5e9;            // per-task CPU box
  double f_max_hz = 4e9;
  double backhaul_bps = 1e9;          // AP -> cloud relay rate
  double energy_budget_j = 1.5;       // per-slot budget
  double antenna_gain_dbi = 10;
  double carrier_hz = 5e9;
  Position position;                  // BS/HAP location
  double orbit_altitude_m = 780e3;    // satellite only
  double orbital_velocity_mps = 4e3;
  double visibility_duty_cycle = 1.0;
  double visibility_phase = 0.0;
  double blockage_prob = 0.0;         // BS/HAP link outage probability
  double rician_k_db = 10.0;          // HAP/satellite fading

  bool computes() const { return tier != Tier::Satellite; }
  double tx_power_w() const { return dbm_to_watt(tx_power_dbm); }
  /// Upper end of the per-task CPU box after the AP-wide cap.
  double f_cap() const { return std::min(f_max_hz, max_cpu_hz); }
};

struct NetworkConfig {
  std::size_t user_count = 1;
  std::vector<ApProfile> aps;
  double noise_dbm_per_hz = -174;
  double user_tx_power_dbm = 30;
  double slot_duration_s = 5;
  std::size_t horizon = 500;
  double cloud_cpu_hz = 2e9;          // F_c, reserved per user
  std::uint64_t rng_seed = 1;
  double area_m = 1000;
  double data_bits_min = 1e6;
  double data_bits_max = 6e6;
  double cycles_per_bit_min = 100;
  double cycles_per_bit_max = 500;
  std::vector<Position> user_positions;  // sampled from rng_seed when empty

  std::size_t ap_count() const { return aps.size(); }
  double user_tx_power_w() const { return dbm_to_watt(user_tx_power_dbm); }
  double noise_w(const ApProfile& ap) const {
    return dbm_to_watt(noise_dbm_per_hz) * ap.bandwidth_hz;
  }

  void validate() const {
    if (user_count < 1) throw ConfigError("user_count: must be >= 1");
    if (aps.empty()) throw ConfigError("aps: at least one AP required");
    if (horizon < 1) throw ConfigError("horizon: must be >= 1");
    if (!std::isfinite(noise_dbm_per_hz) || !std::isfinite(user_tx_power_dbm))
      throw ConfigError("noise_dbm_per_hz/user_tx_power_dbm: must be finite");
    if (!(slot_duration_s > 0)) throw ConfigError("slot_duration_s: must be > 0");
    if (!(cloud_cpu_hz > 0)) throw ConfigError("cloud_cpu_hz: must be > 0");
    if (!(data_bits_min > 0) || data_bits_max < data_bits_min)
      throw ConfigError("data_bits_min/max: need 0 < min <= max");
    if (!(cycles_per_bit_min > 0) || cycles_per_bit_max < cycles_per_bit_min)
      throw ConfigError("cycles_per_bit_min/max: need 0 < min <= max");
    if (!user_positions.empty() && user_positions.size() != user_count)
      throw ConfigError("user_positions: length must equal user_count");
    int last_tier = 0;
    for (std::size_t m = 0; m < aps.size(); ++m) {
      const auto& ap = aps[m];
      const std::string at = "aps[" + std::to_string(m) + "].";
      int tier = static_cast<int>(ap.tier);
      if (tier < last_tier) throw ConfigError(at + "tier: APs must be ordered bs, hap, satellite");
      last_tier = tier;
      if (!(ap.bandwidth_hz > 0)) throw ConfigError(at + "bandwidth_hz: must be > 0");
      if (!std::isfinite(ap.tx_power_dbm)) throw ConfigError(at + "tx_power_dbm: must be finite");
      if (!(0 <= ap.beta_min && ap.beta_min <= ap.beta_max && ap.beta_max <= 1))
        throw ConfigError(at + "beta bounds: need 0 <= beta_min <= beta_max <= 1");
      if (!(ap.backhaul_bps > 0)) throw ConfigError(at + "backhaul_bps: must be > 0");
      if (!(ap.energy_budget_j > 0)) throw ConfigError(at + "energy_budget_j: must be > 0");
      if (!(ap.carrier_hz > 0)) throw ConfigError(at + "carrier_hz: must be > 0");
      if (ap.blockage_prob < 0 || ap.blockage_prob > 1)
        throw ConfigError(at + "blockage_prob: must lie in [0,1]");
      if (ap.computes()) {
        if (!(0 <= ap.f_min_hz && ap.f_min_hz <= ap.f_max_hz && ap.f_max_hz <= ap.max_cpu_hz))
          throw ConfigError(at + "cpu bounds: need 0 <= f_min <= f_max <= max_cpu");
        if (!(ap.f_max_hz > 0)) throw ConfigError(at + "f_max_hz: must be > 0");
        if (ap.switched_capacitance < 0) throw ConfigError(at + "switched_capacitance: must be >= 0");
      } else {
        if (!(ap.orbit_altitude_m > 0) || !(ap.orbital_velocity_mps > 0))
          throw ConfigError(at + "orbit: altitude and velocity must be > 0");
        if (ap.visibility_duty_cycle < 0 || ap.visibility_duty_cycle > 1)
          throw ConfigError(at + "visibility_duty_cycle: must lie in [0,1]");
      }
    }
  }
};

/// Realized randomness of one slot.
struct SlotState {
  std::size_t t = 0;
  Grid<std::uint8_t> available;  // A[u][m]
  Grid<double> gain;             // linear channel gain incl. AP antenna gain
  std::vector<double> data_bits;       // D_u
  std::vector<double> cycles_per_bit;  // C_u

  std::size_t users() const { return available.rows(); }
  std::size_t aps() const { return available.cols(); }

  bool user_active(std::size_t u) const {
    for (std::size_t m = 0; m < aps(); ++m)
      if (available(u, m)) return true;
    return false;
  }
  /// Some user has no available AP this slot.
  bool infeasible() const {
    for (std::size_t u = 0; u < users(); ++u)
      if (!user_active(u)) return true;
    return false;
  }
  std::size_t inactive_users() const {
    std::size_t n = 0;
    for (std::size_t u = 0; u < users(); ++u) n += user_active(u) ? 0 : 1;
    return n;
  }
  double workload(std::size_t u) const { return data_bits[u] * cycles_per_bit[u]; }

  bool operator==(const SlotState&) const = default;
};

/// Free-space path loss (linear, >= 1 for far-field distances).
inline double free_space_loss(double distance_m, double carrier_hz) {
  double x = 4.0 * std::numbers::pi * distance_m * carrier_hz / kSpeedOfLight;
  return x * x;
}

inline double orbital_period_s(const ApProfile& sat) {
  return 2.0 * std::numbers::pi * (kEarthRadius + sat.orbit_altitude_m) / sat.orbital_velocity_mps;
}

inline bool satellite_visible(const ApProfile& sat, double time_s) {
  if (sat.visibility_duty_cycle >= 1.0) return true;
  double phase = time_s / orbital_period_s(sat) + sat.visibility_phase;
  phase -= std::floor(phase);
  return phase < sat.visibility_duty_cycle;
}

/// Ground-user positions: explicit ones from the config or a fixed uniform
/// draw over the square service area.
inline std::vector<Position> resolve_user_positions(const NetworkConfig& cfg) {
  if (!cfg.user_positions.empty()) return cfg.user_positions;
  std::mt19937_64 rng(stream_seed(cfg.rng_seed, 0x706f73ULL));
  std::uniform_real_distribution<double> coord(0.0, cfg.area_m);
  std::vector<Position> out(cfg.user_count);
  for (auto& p : out) {
    p.x = coord(rng);
    p.y = coord(rng);
  }
  return out;
}

inline double distance_m(const Position& a, const Position& b) {
  return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) + (a.z - b.z) * (a.z - b.z));
}

namespace detail {

inline double rayleigh_power(std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  return e(rng);
}

inline double rician_power(std::mt19937_64& rng, double k_db) {
  double k = db_to_linear(k_db);
  std::normal_distribution<double> n(0.0, std::sqrt(0.5 / (k + 1.0)));
  double re = std::sqrt(k / (k + 1.0)) + n(rng);
  double im = n(rng);
  return re * re + im * im;
}

}  // namespace detail

/// Samples slot t. Pure in (cfg, t, seed): every slot owns its own stream.
inline SlotState sample_slot(const NetworkConfig& cfg, std::size_t t, std::uint64_t seed) {
  const std::size_t U = cfg.user_count, M = cfg.ap_count();
  const auto users = resolve_user_positions(cfg);
  std::mt19937_64 rng(stream_seed(seed, 0x736c6f74ULL, t + 1));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SlotState s;
  s.t = t;
  s.available = Grid<std::uint8_t>(U, M, 0);
  s.gain = Grid<double>(U, M, 0.0);
  s.data_bits.resize(U);
  s.cycles_per_bit.resize(U);

  const double time_s = static_cast<double>(t) * cfg.slot_duration_s;
  for (std::size_t u = 0; u < U; ++u) {
    for (std::size_t m = 0; m < M; ++m) {
      const auto& ap = cfg.aps[m];
      // Draw every variate unconditionally so the stream layout is fixed.
      double outage = unit(rng);
      double fading = ap.tier == Tier::BaseStation ? detail::rayleigh_power(rng)
                                                   : detail::rician_power(rng, ap.rician_k_db);
      bool up;
      double d;
      if (ap.tier == Tier::Satellite) {
        up = satellite_visible(ap, time_s);
        d = ap.orbit_altitude_m;
      } else {
        up = outage >= ap.blockage_prob;
        d = std::max(1.0, distance_m(users[u], ap.position));
      }
      s.available(u, m) = up ? 1 : 0;
      s.gain(u, m) = db_to_linear(ap.antenna_gain_dbi) * fading / free_space_loss(d, ap.carrier_hz);
    }
  }
  std::uniform_real_distribution<double> bits(cfg.data_bits_min, cfg.data_bits_max);
  std::uniform_real_distribution<double> cpb(cfg.cycles_per_bit_min, cfg.cycles_per_bit_max);
  for (std::size_t u = 0; u < U; ++u) {
    s.data_bits[u] = bits(rng);
    s.cycles_per_bit[u] = cpb(rng);
  }
  return s;
}

inline SlotState sample_slot(const NetworkConfig& cfg, std::size_t t) {
  return sample_slot(cfg, t, cfg.rng_seed);
}

inline double snr(const NetworkConfig& cfg, std::size_t m, double gain) {
  return cfg.user_tx_power_w() * gain / cfg.noise_w(cfg.aps[m]);
}

/// Uplink Shannon rate for bandwidth fraction beta.
inline double data_rate(double beta, const ApProfile& ap, double gain, const NetworkConfig& cfg) {
  double sigma2 = cfg.noise_w(ap);
  return beta * ap.bandwidth_hz * std::log2(1.0 + cfg.user_tx_power_w() * gain / sigma2);
}

/// Seconds needed to upload D_u at full bandwidth (beta = 1).
inline double full_band_upload_s(const NetworkConfig& cfg, const SlotState& s, std::size_t u,
                                 std::size_t m) {
  return s.data_bits[u] / data_rate(1.0, cfg.aps[m], s.gain(u, m), cfg);
}

/// Delays at equality of the delay constraints, for given beta and f.
inline Allocation complete_allocation(const NetworkConfig& cfg, const SlotState& s,
                                      const Assignment& a, const Grid<double>& beta,
                                      const Grid<double>& f) {
  const std::size_t U = s.users(), M = s.aps();
  Allocation out(U, M);
  out.beta = beta;
  out.f = f;
  for (std::size_t u = 0; u < U; ++u) {
    for (std::size_t m = 0; m < M; ++m) {
      if (!a.alpha(u, m)) continue;
      const auto& ap = cfg.aps[m];
      out.tau_tx(u, m) = s.data_bits[u] / data_rate(beta(u, m), ap, s.gain(u, m), cfg);
      if (a.z(u, m)) {
        out.tau_cp(u, m) = s.workload(u) / f(u, m);
      } else {
        out.tau_txc(u, m) = s.data_bits[u] / ap.backhaul_bps;
        out.tau_cpc(u, m) = s.workload(u) / cfg.cloud_cpu_hz;
      }
    }
  }
  return out;
}

struct ServiceOutcome {
  std::vector<double> user_delay;  // O_u
  Grid<double> energy;             // e^AP[u][m]
  std::vector<double> ap_energy;   // sum over users
  double total_delay = 0;
};

/// Checks that an allocation is consistent with the assignment and satisfies
/// every box, capacity and delay constraint. Throws InvalidAllocation.
inline void check_allocation(const NetworkConfig& cfg, const SlotState& s, const Assignment& a,
                             const Allocation& x, double rel_tol = 1e-7) {
  const std::size_t U = s.users(), M = s.aps();
  auto fail = [](const std::string& what, std::size_t u, std::size_t m) {
    throw InvalidAllocation(what + " at (u=" + std::to_string(u) + ", m=" + std::to_string(m) + ")");
  };
  for (std::size_t u = 0; u < U; ++u) {
    int assoc = 0;
    for (std::size_t m = 0; m < M; ++m) {
      const auto& ap = cfg.aps[m];
      bool al = a.alpha(u, m), zz = a.z(u, m);
      assoc += al;
      if (al && !s.available(u, m)) fail("association without connectivity", u, m);
      if (zz && !al) fail("onboard compute without association", u, m);
      if (zz && !ap.computes()) fail("onboard compute on a satellite", u, m);
      for (const Grid<double>* g : {&x.beta, &x.f, &x.tau_tx, &x.tau_cp, &x.tau_txc, &x.tau_cpc})
        if (!((*g)(u, m) >= 0)) fail("negative or NaN allocation entry", u, m);
      double b = x.beta(u, m);
      if (!al && b != 0) fail("bandwidth without association", u, m);
      if (al && (b < ap.beta_min * (1 - rel_tol) || b > ap.beta_max * (1 + rel_tol)))
        fail("bandwidth fraction outside box", u, m);
      double f = x.f(u, m);
      if (!zz && f != 0) fail("cpu without onboard compute", u, m);
      if (zz && (f < ap.f_min_hz * (1 - rel_tol) || f > ap.f_max_hz * (1 + rel_tol)))
        fail("cpu frequency outside box", u, m);
      if (al) {
        double need = s.data_bits[u] / data_rate(b, ap, s.gain(u, m), cfg);
        if (x.tau_tx(u, m) < need * (1 - rel_tol)) fail("uplink delay below requirement", u, m);
        if (!zz) {
          if (x.tau_txc(u, m) < s.data_bits[u] / ap.backhaul_bps * (1 - rel_tol))
            fail("relay delay below requirement", u, m);
          if (x.tau_cpc(u, m) < s.workload(u) / cfg.cloud_cpu_hz * (1 - rel_tol))
            fail("cloud compute delay below requirement", u, m);
        }
      }
      if (zz && x.tau_cp(u, m) < s.workload(u) / f * (1 - rel_tol))
        fail("onboard compute delay below requirement", u, m);
    }
    if (assoc > 1) fail("user associated with more than one AP", u, 0);
    if (assoc == 0 && s.user_active(u)) fail("active user left unassociated", u, 0);
  }
  for (std::size_t m = 0; m < M; ++m) {
    double sb = 0, sf = 0;
    for (std::size_t u = 0; u < U; ++u) {
      sb += x.beta(u, m);
      sf += x.f(u, m);
    }
    if (sb > 1 + 1e-9) fail("bandwidth capacity exceeded", 0, m);
    if (sf > cfg.aps[m].max_cpu_hz + 1e-3) fail("cpu capacity exceeded", 0, m);
  }
}

/// Per-user service delay and per-AP energy. The onboard compute energy is
/// kappa * f^2 * D * C (compute delay at equality).
inline ServiceOutcome service_delay(const NetworkConfig& cfg, const SlotState& s,
                                    const Assignment& a, const Allocation& x, bool validate = true) {
  if (validate) check_allocation(cfg, s, a, x);
  const std::size_t U = s.users(), M = s.aps();
  ServiceOutcome out;
  out.user_delay.assign(U, 0.0);
  out.energy = Grid<double>(U, M, 0.0);
  out.ap_energy.assign(M, 0.0);
  for (std::size_t u = 0; u < U; ++u) {
    for (std::size_t m = 0; m < M; ++m) {
      out.user_delay[u] += x.tau_tx(u, m) + x.tau_cp(u, m) + x.tau_txc(u, m) + x.tau_cpc(u, m);
      const auto& ap = cfg.aps[m];
      double e = ap.tx_power_w() * x.tau_txc(u, m);
      if (a.z(u, m)) e += ap.switched_capacitance * x.f(u, m) * x.f(u, m) * s.workload(u);
      out.energy(u, m) = e;
      out.ap_energy[m] += e;
    }
    out.total_delay += out.user_delay[u];
  }
  return out;
}

}  // namespace satin
