// Shared test scenarios and independent reference checks.
#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "satin/io.hpp"
#include "satin/master.hpp"
#include "satin/scenario.hpp"
#include "satin/subproblem.hpp"

namespace satin::testing {

inline std::string source_path(const std::string& rel) { return std::string(SATIN_SOURCE_DIR) + "/" + rel; }

inline ApProfile bs_at(double x, double y) {
  ApProfile bs;
  bs.tier = Tier::BaseStation;
  bs.position = {x, y, 25};
  bs.blockage_prob = 0.1;
  return bs;
}

inline ApProfile hap_at(double x, double y) {
  ApProfile hap;
  hap.tier = Tier::Hap;
  hap.bandwidth_hz = 400e6;
  hap.carrier_hz = 38e9;
  hap.antenna_gain_dbi = 15;
  hap.tx_power_dbm = 38;
  hap.position = {x, y, 20000};
  hap.backhaul_bps = 5e8;
  return hap;
}

inline ApProfile satellite() {
  ApProfile sat;
  sat.tier = Tier::Satellite;
  sat.bandwidth_hz = 800e6;
  sat.tx_power_dbm = 42;
  sat.carrier_hz = 30e9;
  sat.antenna_gain_dbi = 50;
  sat.switched_capacitance = 0;
  return sat;
}

/// One BS, one HAP, one satellite.
inline NetworkConfig three_tier(std::size_t users, std::uint64_t seed = 3) {
  NetworkConfig c;
  c.user_count = users;
  c.rng_seed = seed;
  c.aps = {bs_at(0, 0), hap_at(200, 800), satellite()};
  c.validate();
  return c;
}

inline ExperimentConfig downsized() { return load_experiment(source_path("configs/downsized.json")); }

/// Queue vector that varies with the slot so queue terms are exercised.
inline QueueState varied_queue(std::size_t aps, std::size_t t) {
  QueueState q(aps);
  for (std::size_t m = 0; m < aps; ++m) q.backlog[m] = std::fmod(0.7 * static_cast<double>(t + 1) * (m + 1), 3.0);
  return q;
}

/// Direct check of the association rules on (alpha, z), written against the
/// constraint definitions rather than the master model.
struct ConstraintReport {
  bool availability = true, single = true, satellite = true, consistency = true;
  bool ok() const { return availability && single && satellite && consistency; }
};

inline ConstraintReport check_rules(const Grid<std::uint8_t>& avail, const std::vector<std::uint8_t>& computes,
                                    const Assignment& a) {
  ConstraintReport r;
  for (std::size_t u = 0; u < a.users(); ++u) {
    int sum = 0, reachable = 0;
    for (std::size_t m = 0; m < a.aps(); ++m) {
      sum += a.alpha(u, m);
      reachable += avail(u, m);
      if (a.alpha(u, m) > avail(u, m)) r.availability = false;
      if (!computes[m] && a.z(u, m)) r.satellite = false;
      if (a.z(u, m) > a.alpha(u, m)) r.consistency = false;
    }
    if (reachable > 0 && sum != 1) r.single = false;
  }
  return r;
}

/// Enumerates every (alpha, z) that obeys the association rules.
template <typename Fn>
void for_each_rule_assignment(const Grid<std::uint8_t>& avail, const std::vector<std::uint8_t>& computes, Fn fn) {
  const std::size_t U = avail.rows(), M = avail.cols();
  std::vector<std::vector<Choice>> opts(U);
  for (std::size_t u = 0; u < U; ++u) {
    for (std::size_t m = 0; m < M; ++m) {
      if (!avail(u, m)) continue;
      opts[u].push_back({static_cast<int>(m), false});
      if (computes[m]) opts[u].push_back({static_cast<int>(m), true});
    }
    if (opts[u].empty()) opts[u].push_back({});
  }
  std::vector<std::size_t> idx(U, 0);
  while (true) {
    std::vector<Choice> c(U);
    for (std::size_t u = 0; u < U; ++u) c[u] = opts[u][idx[u]];
    fn(Assignment::from_choices(c, M));
    std::size_t u = 0;
    while (u < U && ++idx[u] == opts[u].size()) idx[u++] = 0;
    if (u == U) break;
  }
}

inline Qubo random_qubo(std::size_t n, std::uint64_t seed, double density = 0.5) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0), unit(0.0, 1.0);
  Qubo q;
  q.num_vars = n;
  q.offset = coef(rng);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j)
      if (i == j || unit(rng) < density) q.add(i, j, coef(rng));
  return q;
}

/// Plain double loop over the coefficient map.
inline double brute_energy(const Qubo& q, const std::vector<std::uint8_t>& x) {
  double e = q.offset;
  for (const auto& [ij, c] : q.terms) e += c * x[ij.first] * x[ij.second];
  return e;
}

inline std::vector<std::uint8_t> bits_of(std::uint64_t code, std::size_t n) {
  std::vector<std::uint8_t> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = (code >> i) & 1;
  return x;
}

// Real master from subproblem solves on a BS + satellite slot.
struct RealMaster {
  NetworkConfig cfg;
  SlotState s;
  MasterModel mm;
};

inline RealMaster real_master(std::size_t users, std::size_t cuts, std::uint64_t seed) {
  RealMaster r;
  r.cfg.user_count = users;
  r.cfg.aps = {satin::testing::bs_at(0, 0), satin::testing::satellite()};
  r.cfg.validate();
  r.s = sample_slot(r.cfg, seed, 1000 + seed);
  for (std::size_t u = 0; u < users; ++u) {
    r.s.available(u, 0) = 1;
    r.s.available(u, 1) = 1;
  }
  r.mm = MasterModel::build(r.cfg, r.s);
  QueueState q = satin::testing::varied_queue(2, seed);
  SubproblemOptions so;
  so.V = 10;
  std::mt19937_64 rng(seed);
  std::vector<Assignment> seen;
  while (r.mm.cuts.size() < cuts) {
    std::vector<Choice> pick(users);
    for (std::size_t u = 0; u < users; ++u) {
      auto o = r.mm.options(u);
      pick[u] = o[rng() % o.size()];
    }
    auto a = Assignment::from_choices(pick, 2);
    if (std::find(seen.begin(), seen.end(), a) != seen.end()) continue;
    seen.push_back(a);
    r.mm.add_cut(make_cut(r.cfg, r.s, solve_subproblem(r.cfg, r.s, a, q, so)));
  }
  return r;
}

// Penalized objective evaluated from the cut data, without the compiled
// coefficient map.
struct Symbolic {
  const MasterModel& mm;
  const QuboModel& q;
  std::vector<double> chat_const;
  std::vector<Grid<double>> chat_alpha, chat_z;

  Symbolic(const MasterModel& m, const QuboModel& qm) : mm(m), q(qm) {
    for (const auto& sc : q.cuts) {
      const auto& c = mm.cuts[sc.source];
      double k = (c.constant - q.mu_shift) / q.mu_scale;
      Grid<double> ga(mm.users, mm.aps, 0.0), gz(mm.users, mm.aps, 0.0);
      for (std::size_t u = 0; u < mm.users; ++u) {
        double base = kInf;
        for (const auto& ch : mm.options(u)) base = std::min(base, c.term(u, ch));
        k += base / q.mu_scale;
        for (std::size_t m = 0; m < mm.aps; ++m) {
          if (!mm.available(u, m)) continue;
          ga(u, m) = (c.a(u, m) - base) / q.mu_scale;
          if (mm.computes[m]) gz(u, m) = (c.b(u, m) + c.q(u, m)) / q.mu_scale;
        }
      }
      chat_const.push_back(k);
      chat_alpha.push_back(ga);
      chat_z.push_back(gz);
    }
  }

  double operator()(const std::vector<std::uint8_t>& x) const {
    const auto& z = q.zeta;
    std::vector<std::uint8_t> w;
    for (auto i : q.w_index) w.push_back(x[i]);
    double mu = encode_mu(w, q.encoding);
    double e = mu;
    for (std::size_t u = 0; u < mm.users; ++u) {
      double n = 0;
      for (std::size_t m = 0; m < mm.aps; ++m) {
        double al = x[q.alpha_index(u, m)], zz = x[q.z_index(u, m)];
        n += al;
        if (!mm.available(u, m)) e += z.availability * al;
        if (!mm.computes[m]) e += z.satellite_relay * zz;
        e += z.offload_consistency * zz * (1 - al);
      }
      if (mm.active(u)) e += z.single_association * (1 - n) * (1 - n);
    }
    for (std::size_t k = 0; k < q.cuts.size(); ++k) {
      const auto& sc = q.cuts[k];
      double c = chat_const[k];
      for (std::size_t u = 0; u < mm.users; ++u)
        for (std::size_t m = 0; m < mm.aps; ++m)
          c += chat_alpha[k](u, m) * x[q.alpha_index(u, m)] + chat_z[k](u, m) * x[q.z_index(u, m)];
      double s = 0;
      for (std::size_t b = 0; b < sc.slack_bits; ++b) s += x[sc.slack_first + b] * q.encoding.resolution() * std::ldexp(1.0, b);
      e += z.cut * (c - mu + s) * (c - mu + s);
    }
    return e;
  }
};

}  // namespace satin::testing
