// Master problem over the binaries: min mu s.t. mu >= cut_k(alpha, z) for
// every accumulated cut, plus the association rules. Solved either exactly
// (branch and bound over per-user choices) or compiled to a penalized QUBO
// for a sampler.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "satin/qubo.hpp"
#include "satin/subproblem.hpp"

namespace satin {

/// Fixed-point binary encoding of the (scaled) epigraph variable.
/// Bits 0..n2-1 carry +2^(i - fraction_bits); bits n2..N-1 carry
/// -2^(j - n2), where n2 = 1 + integer_bits + fraction_bits.
struct MuEncoding {
  std::size_t integer_bits = 14;
  std::size_t fraction_bits = 6;
  std::size_t negative_bits = 8;

  std::size_t size() const { return 1 + integer_bits + fraction_bits + negative_bits; }
  std::size_t positive_count() const { return 1 + integer_bits + fraction_bits; }
  double weight(std::size_t i) const {
    auto n2 = positive_count();
    if (i < n2) return std::ldexp(1.0, static_cast<int>(i) - static_cast<int>(fraction_bits));
    return -std::ldexp(1.0, static_cast<int>(i - n2));
  }
  double resolution() const { return std::ldexp(1.0, -static_cast<int>(fraction_bits)); }
  double max_value() const { return std::ldexp(1.0, static_cast<int>(integer_bits) + 1) - resolution(); }
  double min_value() const { return -(std::ldexp(1.0, static_cast<int>(negative_bits)) - 1.0); }
};

inline double encode_mu(std::span<const std::uint8_t> w, const MuEncoding& enc) {
  if (w.size() != enc.size())
    throw std::invalid_argument("encode_mu: expected " + std::to_string(enc.size()) + " bits, got " +
                                std::to_string(w.size()));
  double v = 0;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i]) v += enc.weight(i);
  return v;
}

struct MasterModel {
  std::size_t users = 0, aps = 0;
  Grid<std::uint8_t> available;
  std::vector<std::uint8_t> computes;
  std::vector<std::size_t> max_associated;  // from sum beta_min <= 1
  std::vector<std::size_t> max_onboard;     // from sum f_min <= F_m
  bool energy_screen = false;               // hard per-slot energy budgets
  Grid<double> relay_energy;                // P_m D_u / r_mc
  Grid<double> onboard_min_energy;          // kappa f_min^2 D_u C_u
  std::vector<double> energy_budget;
  std::vector<BendersCut> cuts;

  static MasterModel build(const NetworkConfig& cfg, const SlotState& s, bool energy_screen = false) {
    MasterModel mm;
    mm.users = s.users();
    mm.aps = s.aps();
    mm.available = s.available;
    mm.energy_screen = energy_screen;
    mm.relay_energy = Grid<double>(mm.users, mm.aps, 0.0);
    mm.onboard_min_energy = Grid<double>(mm.users, mm.aps, 0.0);
    for (std::size_t m = 0; m < mm.aps; ++m) {
      const auto& ap = cfg.aps[m];
      mm.computes.push_back(ap.computes() ? 1 : 0);
      auto cap = [&](double total, double each) {
        if (each <= 0) return mm.users;
        return std::min(mm.users, static_cast<std::size_t>(std::floor(total * (1 + 1e-12) / each)));
      };
      mm.max_associated.push_back(cap(1.0, ap.beta_min));
      mm.max_onboard.push_back(ap.computes() ? cap(ap.max_cpu_hz, ap.f_min_hz) : 0);
      mm.energy_budget.push_back(ap.energy_budget_j);
      for (std::size_t u = 0; u < mm.users; ++u) {
        mm.relay_energy(u, m) = ap.tx_power_w() * s.data_bits[u] / ap.backhaul_bps;
        mm.onboard_min_energy(u, m) = ap.switched_capacitance * ap.f_min_hz * ap.f_min_hz * s.workload(u);
      }
    }
    return mm;
  }

  void add_cut(BendersCut c) { cuts.push_back(std::move(c)); }

  bool active(std::size_t u) const {
    for (std::size_t m = 0; m < aps; ++m)
      if (available(u, m)) return true;
    return false;
  }

  /// Structurally valid choices for user u, in AP order then cloud before
  /// onboard. Inactive users have the single "none" choice.
  std::vector<Choice> options(std::size_t u) const {
    std::vector<Choice> out;
    for (std::size_t m = 0; m < aps; ++m) {
      if (!available(u, m)) continue;
      out.push_back({static_cast<int>(m), false});
      if (computes[m]) out.push_back({static_cast<int>(m), true});
    }
    if (out.empty()) out.push_back({});
    return out;
  }

  double option_product() const {
    double p = 1;
    for (std::size_t u = 0; u < users; ++u) p *= static_cast<double>(options(u).size());
    return p;
  }

  /// Association rules: availability, one AP per active user, no onboard
  /// compute on satellites, z <= alpha.
  bool structurally_feasible(const Assignment& a) const {
    for (std::size_t u = 0; u < users; ++u) {
      int n = 0;
      for (std::size_t m = 0; m < aps; ++m) {
        if (a.alpha(u, m) && !available(u, m)) return false;
        if (a.z(u, m) && (!a.alpha(u, m) || !computes[m])) return false;
        n += a.alpha(u, m);
      }
      if (n != (active(u) ? 1 : 0)) return false;
    }
    return true;
  }

  /// Box-minimum capacity screen and, in hard-budget mode, the minimum
  /// energy screen.
  bool screen_ok(const Assignment& a) const {
    for (std::size_t m = 0; m < aps; ++m) {
      std::size_t n1 = 0, n2 = 0;
      double e = 0;
      for (std::size_t u = 0; u < users; ++u) {
        n1 += a.alpha(u, m);
        n2 += a.z(u, m);
        if (a.alpha(u, m)) e += a.z(u, m) ? onboard_min_energy(u, m) : relay_energy(u, m);
      }
      if (n1 > max_associated[m] || n2 > max_onboard[m]) return false;
      if (energy_screen && e > energy_budget[m] * (1 + 1e-12)) return false;
    }
    return true;
  }

  bool feasible(const Assignment& a) const { return structurally_feasible(a) && screen_ok(a); }

  /// max_k cut_k(y); -inf without cuts.
  double epigraph(const Assignment& a) const {
    double v = -kInf;
    for (const auto& c : cuts) v = std::max(v, c.evaluate(a));
    return v;
  }
};

struct MasterSolution {
  bool found = false;
  Assignment assignment;
  double mu = kInf;
  std::size_t nodes = 0;
};

/// Exact master by depth-first branch and bound over per-user choices in
/// lexicographic order. Ties keep the lexicographically first assignment.
inline MasterSolution solve_master_exact(const MasterModel& mm, double size_cap = 1048576.0) {
  if (mm.option_product() > size_cap)
    throw SizeCapExceeded("master: " + std::to_string(mm.option_product()) + " assignments exceed cap");
  const std::size_t U = mm.users, M = mm.aps, K = mm.cuts.size();
  std::vector<std::vector<Choice>> opts(U);
  for (std::size_t u = 0; u < U; ++u) opts[u] = mm.options(u);
  // term[u][j][k]
  std::vector<std::vector<std::vector<double>>> term(U);
  std::vector<std::vector<double>> suffix(U + 1, std::vector<double>(K, 0.0));
  for (std::size_t u = 0; u < U; ++u) {
    term[u].resize(opts[u].size(), std::vector<double>(K));
    for (std::size_t j = 0; j < opts[u].size(); ++j)
      for (std::size_t k = 0; k < K; ++k) term[u][j][k] = mm.cuts[k].term(u, opts[u][j]);
  }
  for (std::size_t u = U; u-- > 0;)
    for (std::size_t k = 0; k < K; ++k) {
      double lo = kInf;
      for (std::size_t j = 0; j < opts[u].size(); ++j) lo = std::min(lo, term[u][j][k]);
      suffix[u][k] = suffix[u + 1][k] + lo;
    }

  MasterSolution best;
  std::vector<Choice> pick(U);
  std::vector<std::size_t> n1(M, 0), n2(M, 0);
  std::vector<double> energy(M, 0.0);
  std::vector<std::vector<double>> partial(U + 1, std::vector<double>(K, 0.0));
  for (std::size_t k = 0; k < K; ++k) partial[0][k] = mm.cuts[k].constant;

  std::function<void(std::size_t)> dfs = [&](std::size_t u) {
    ++best.nodes;
    double bound = -kInf;
    for (std::size_t k = 0; k < K; ++k) bound = std::max(bound, partial[u][k] + suffix[u][k]);
    if (best.found && (K == 0 || bound >= best.mu)) return;
    if (u == U) {
      best.found = true;
      best.mu = bound;
      best.assignment = Assignment::from_choices(pick, M);
      return;
    }
    for (std::size_t j = 0; j < opts[u].size(); ++j) {
      const Choice& c = opts[u][j];
      if (c.ap >= 0) {
        auto m = static_cast<std::size_t>(c.ap);
        if (n1[m] + 1 > mm.max_associated[m]) continue;
        if (c.local && n2[m] + 1 > mm.max_onboard[m]) continue;
        double de = c.local ? mm.onboard_min_energy(u, m) : mm.relay_energy(u, m);
        if (mm.energy_screen && energy[m] + de > mm.energy_budget[m] * (1 + 1e-12)) continue;
        ++n1[m];
        n2[m] += c.local;
        energy[m] += de;
        pick[u] = c;
        for (std::size_t k = 0; k < K; ++k) partial[u + 1][k] = partial[u][k] + term[u][j][k];
        dfs(u + 1);
        --n1[m];
        n2[m] -= c.local;
        energy[m] -= de;
      } else {
        pick[u] = c;
        partial[u + 1] = partial[u];
        dfs(u + 1);
      }
    }
  };
  dfs(0);
  return best;
}

/// Calls fn(assignment) for every feasible assignment in lexicographic
/// choice order. Returns the number of structurally valid assignments that
/// failed the screens.
template <typename Fn>
std::size_t for_each_feasible(const MasterModel& mm, Fn&& fn, double size_cap = 1048576.0) {
  if (mm.option_product() > size_cap)
    throw SizeCapExceeded("enumeration: " + std::to_string(mm.option_product()) + " assignments exceed cap");
  std::vector<std::vector<Choice>> opts(mm.users);
  for (std::size_t u = 0; u < mm.users; ++u) opts[u] = mm.options(u);
  std::vector<std::size_t> idx(mm.users, 0);
  std::vector<Choice> pick(mm.users);
  std::size_t screened = 0;
  while (true) {
    for (std::size_t u = 0; u < mm.users; ++u) pick[u] = opts[u][idx[u]];
    Assignment a = Assignment::from_choices(pick, mm.aps);
    if (mm.screen_ok(a)) fn(a); else ++screened;
    std::size_t u = mm.users;
    while (u > 0) {
      --u;
      if (++idx[u] < opts[u].size()) break;
      idx[u] = 0;
      if (u == 0) return screened;
    }
    if (mm.users == 0) return screened;
  }
}

// ---------------------------------------------------------------------------
// QUBO compilation

enum class Family { Availability, SingleAssociation, SatelliteRelay, OffloadConsistency, Cut };

inline const char* family_name(Family f) {
  switch (f) {
    case Family::Availability: return "availability";
    case Family::SingleAssociation: return "single-association";
    case Family::SatelliteRelay: return "satellite-relay";
    case Family::OffloadConsistency: return "offload-consistency";
    case Family::Cut: return "cut";
  }
  return "?";
}

/// Penalty weights per constraint family; 0 selects the default.
struct PenaltyWeights {
  double availability = 0;
  double single_association = 0;
  double satellite_relay = 0;
  double offload_consistency = 0;
  double cut = 0;

  double& operator[](Family f) {
    switch (f) {
      case Family::Availability: return availability;
      case Family::SingleAssociation: return single_association;
      case Family::SatelliteRelay: return satellite_relay;
      case Family::OffloadConsistency: return offload_consistency;
      case Family::Cut: return cut;
    }
    return cut;
  }
  double operator[](Family f) const { return const_cast<PenaltyWeights&>(*this)[f]; }
};

struct CompileOptions {
  MuEncoding encoding;
  /// The interval [mu_floor, mu_ceiling] is mapped affinely onto
  /// [0, 2^integer_bits] of the scaled variable. NaN selects the cut-derived
  /// floor and the best generating value as ceiling.
  double mu_floor = std::numeric_limits<double>::quiet_NaN();
  double mu_ceiling = std::numeric_limits<double>::quiet_NaN();
  PenaltyWeights penalties;
  double coefficient_cap = 1e12;
  bool drop_slack_cuts = true;
};

enum class VarKind { Alpha, Z, W, Slack };

struct QuboVariable {
  std::string name;
  VarKind kind;
  std::size_t a = 0, b = 0;  // (u, m) for alpha/z, (bit) for w, (cut, bit) for slack
};

/// Cut in the scaled variable, linear in the bits. alpha*z is replaced by z
/// and each user's cheapest option is folded into the constant; both are
/// exact on assignments that satisfy the association rules.
struct ScaledCut {
  std::size_t source = 0;  // index into MasterModel::cuts
  double constant = 0;
  Grid<double> alpha, z;
  double min_value = 0, max_value = 0;
  std::size_t slack_first = 0, slack_bits = 0;
};

struct QuboModel : Qubo {
  std::vector<QuboVariable> registry;
  std::unordered_map<std::string, std::size_t> index;
  Grid<std::size_t> alpha_index, z_index;
  std::vector<std::size_t> w_index;
  std::vector<ScaledCut> cuts;
  MuEncoding encoding;
  double mu_shift = 0, mu_scale = 1;
  PenaltyWeights zeta;
  Grid<std::uint8_t> available;
  std::vector<std::uint8_t> computes;
  std::size_t dropped_cuts = 0;

  std::size_t users() const { return alpha_index.rows(); }
  std::size_t aps() const { return alpha_index.cols(); }
  double unscale(double mu_bar) const { return mu_shift + mu_scale * mu_bar; }

  std::size_t push(std::string name, VarKind kind, std::size_t a, std::size_t b) {
    std::size_t i = registry.size();
    index.emplace(name, i);
    registry.push_back({std::move(name), kind, a, b});
    num_vars = registry.size();
    return i;
  }
};

namespace detail {

inline double user_term(const ScaledCut& c, std::size_t u, const Choice& ch) {
  if (ch.ap < 0) return 0;
  auto m = static_cast<std::size_t>(ch.ap);
  return c.alpha(u, m) + (ch.local ? c.z(u, m) : 0.0);
}

/// Adds zeta * (sum_i l_i x_i + constant)^2.
inline void add_squared(Qubo& q, double zeta, const std::vector<std::pair<std::size_t, double>>& lin,
                        double constant) {
  q.offset += zeta * constant * constant;
  for (std::size_t i = 0; i < lin.size(); ++i) {
    auto [xi, li] = lin[i];
    q.add(xi, xi, zeta * (li * li + 2 * constant * li));
    for (std::size_t j = i + 1; j < lin.size(); ++j) q.add(xi, lin[j].first, zeta * 2 * li * lin[j].second);
  }
}

}  // namespace detail

/// Lower end of the valid epigraph range: max_k min_y cut_k(y).
inline double cut_floor(const MasterModel& mm) {
  double floor = -kInf;
  for (const auto& c : mm.cuts) {
    double v = c.constant;
    for (std::size_t u = 0; u < mm.users; ++u) {
      double lo = kInf;
      for (const auto& ch : mm.options(u)) lo = std::min(lo, c.term(u, ch));
      v += lo;
    }
    floor = std::max(floor, v);
  }
  return floor;
}

inline QuboModel compile_qubo(const MasterModel& mm, const CompileOptions& opt) {
  if (mm.cuts.empty()) throw std::invalid_argument("compile_qubo: master has no cuts");
  const std::size_t U = mm.users, M = mm.aps;
  const MuEncoding& enc = opt.encoding;
  QuboModel q;
  q.encoding = enc;
  q.available = mm.available;
  q.computes = mm.computes;

  double floor = std::isnan(opt.mu_floor) ? cut_floor(mm) : opt.mu_floor;
  double ceiling = opt.mu_ceiling;
  if (std::isnan(ceiling)) {
    ceiling = kInf;
    for (const auto& c : mm.cuts) ceiling = std::min(ceiling, c.origin_value);
  }
  if (!std::isfinite(floor) || !std::isfinite(ceiling)) throw std::invalid_argument("compile_qubo: mu range not finite");

  // Per-user option terms of every cut. Each active user picks exactly one
  // option, so subtracting the user's cheapest term from all its options and
  // adding it to the constant leaves every valid assignment's value intact.
  std::vector<std::vector<Choice>> opts(U);
  for (std::size_t u = 0; u < U; ++u) opts[u] = mm.options(u);
  double spread = 0;
  for (const auto& c : mm.cuts)
    for (std::size_t u = 0; u < U; ++u) {
      double tl = kInf, th = -kInf;
      for (const auto& ch : opts[u]) {
        tl = std::min(tl, c.term(u, ch));
        th = std::max(th, c.term(u, ch));
      }
      spread = std::max(spread, th - tl);
    }
  // [floor, ceiling] and every single-user spread fit the integer range.
  double span = std::max({ceiling - floor, spread, 1e-12 * std::max(1.0, std::abs(ceiling))});
  q.mu_shift = floor;
  q.mu_scale = span / std::ldexp(1.0, static_cast<int>(enc.integer_bits));

  const double lo = enc.min_value(), hi = enc.max_value(), g = enc.resolution();
  const double range = hi - lo;
  for (Family f : {Family::Availability, Family::SingleAssociation, Family::SatelliteRelay,
                   Family::OffloadConsistency, Family::Cut})
    q.zeta[f] = opt.penalties[f] > 0 ? opt.penalties[f] : 2.0 * range;

  for (std::size_t k = 0; k < mm.cuts.size(); ++k) {
    const auto& c = mm.cuts[k];
    ScaledCut sc;
    sc.source = k;
    sc.constant = (c.constant - q.mu_shift) / q.mu_scale;
    sc.alpha = Grid<double>(U, M, 0.0);
    sc.z = Grid<double>(U, M, 0.0);
    for (std::size_t u = 0; u < U; ++u) {
      double base = kInf;
      for (const auto& ch : opts[u]) base = std::min(base, c.term(u, ch));
      sc.constant += base / q.mu_scale;
      for (std::size_t m = 0; m < M; ++m) {
        if (!mm.available(u, m)) continue;
        sc.alpha(u, m) = (c.a(u, m) - base) / q.mu_scale;
        if (mm.computes[m]) sc.z(u, m) = (c.b(u, m) + c.q(u, m)) / q.mu_scale;
      }
    }
    sc.min_value = sc.max_value = sc.constant;
    for (std::size_t u = 0; u < U; ++u) {
      double uh = -kInf;
      for (const auto& ch : opts[u]) uh = std::max(uh, detail::user_term(sc, u, ch));
      sc.max_value += uh;
    }
    if (opt.drop_slack_cuts && sc.max_value <= lo) {
      ++q.dropped_cuts;
      continue;
    }
    q.cuts.push_back(std::move(sc));
  }

  // Registry.
  q.alpha_index = Grid<std::size_t>(U, M, 0);
  q.z_index = Grid<std::size_t>(U, M, 0);
  for (std::size_t u = 0; u < U; ++u)
    for (std::size_t m = 0; m < M; ++m)
      q.alpha_index(u, m) = q.push("alpha[" + std::to_string(u) + "][" + std::to_string(m) + "]", VarKind::Alpha, u, m);
  for (std::size_t u = 0; u < U; ++u)
    for (std::size_t m = 0; m < M; ++m)
      q.z_index(u, m) = q.push("z[" + std::to_string(u) + "][" + std::to_string(m) + "]", VarKind::Z, u, m);
  for (std::size_t i = 0; i < enc.size(); ++i)
    q.w_index.push_back(q.push("w[" + std::to_string(i) + "]", VarKind::W, i, 0));
  for (std::size_t k = 0; k < q.cuts.size(); ++k) {
    auto& sc = q.cuts[k];
    double xbar = hi - sc.min_value;
    sc.slack_bits = xbar <= 0 ? 0 : static_cast<std::size_t>(std::ceil(std::log2(xbar / g + 1.0) - 1e-12));
    sc.slack_first = q.registry.size();
    for (std::size_t b = 0; b < sc.slack_bits; ++b)
      q.push("s5[" + std::to_string(sc.source) + "][" + std::to_string(b) + "]", VarKind::Slack, sc.source, b);
  }

  // Objective: mu_bar(w).
  for (std::size_t i = 0; i < enc.size(); ++i) q.add(q.w_index[i], q.w_index[i], enc.weight(i));

  for (std::size_t u = 0; u < U; ++u) {
    bool active = mm.active(u);
    for (std::size_t m = 0; m < M; ++m) {
      std::size_t ai = q.alpha_index(u, m), zi = q.z_index(u, m);
      // alpha <= A: vacuous when A = 1, forces alpha = 0 (no slack) when A = 0.
      if (!mm.available(u, m)) q.add(ai, ai, q.zeta.availability);
      if (!mm.computes[m]) q.add(zi, zi, q.zeta.satellite_relay);
      // (z - z alpha)^2 = z (1 - alpha)
      q.add(zi, zi, q.zeta.offload_consistency);
      q.add(ai, zi, -q.zeta.offload_consistency);
    }
    if (active) {
      // (sum_m alpha - 1)^2 = 1 - sum alpha + 2 sum_{m<m'} alpha alpha'
      q.offset += q.zeta.single_association;
      for (std::size_t m = 0; m < M; ++m) {
        q.add(q.alpha_index(u, m), q.alpha_index(u, m), -q.zeta.single_association);
        for (std::size_t m2 = m + 1; m2 < M; ++m2)
          q.add(q.alpha_index(u, m), q.alpha_index(u, m2), 2 * q.zeta.single_association);
      }
    }
  }

  // Cuts: zeta (c_hat(y) - mu_bar(w) + s)^2.
  for (const auto& sc : q.cuts) {
    std::vector<std::pair<std::size_t, double>> lin;
    for (std::size_t u = 0; u < U; ++u)
      for (std::size_t m = 0; m < M; ++m) {
        if (sc.alpha(u, m) != 0) lin.push_back({q.alpha_index(u, m), sc.alpha(u, m)});
        if (sc.z(u, m) != 0) lin.push_back({q.z_index(u, m), sc.z(u, m)});
      }
    for (std::size_t i = 0; i < enc.size(); ++i) lin.push_back({q.w_index[i], -enc.weight(i)});
    for (std::size_t b = 0; b < sc.slack_bits; ++b) lin.push_back({sc.slack_first + b, g * std::ldexp(1.0, static_cast<int>(b))});
    detail::add_squared(q, q.zeta.cut, lin, sc.constant);
  }

  // Drop terms that cancelled exactly.
  for (auto it = q.terms.begin(); it != q.terms.end();) it = it->second == 0 ? q.terms.erase(it) : std::next(it);

  double peak = q.max_abs_coefficient();
  if (!(peak <= opt.coefficient_cap))
    throw PenaltyOverflow("compiled coefficient " + std::to_string(peak) + " exceeds cap " +
                          std::to_string(opt.coefficient_cap));
  return q;
}

struct Violation {
  Family family;
  std::size_t index;  // user for the association families, cut source otherwise
  double amount = 1;
};

struct DecodedSample {
  Assignment assignment;
  double mu_bar = 0;
  double mu = 0;
  std::vector<Violation> violations;
  bool feasible() const { return violations.empty(); }
  bool violates(Family f) const {
    return std::any_of(violations.begin(), violations.end(), [f](const Violation& v) { return v.family == f; });
  }
};

/// Extracts (alpha, z, mu) from a bitstring and lists violated constraint
/// families. A cut counts as violated only beyond the encoding resolution.
inline DecodedSample decode_sample(const QuboModel& q, std::span<const std::uint8_t> bits) {
  if (bits.size() != q.num_vars) throw std::invalid_argument("decode_sample: bit count mismatch");
  const std::size_t U = q.users(), M = q.aps();
  DecodedSample d;
  d.assignment = Assignment(U, M);
  for (std::size_t u = 0; u < U; ++u)
    for (std::size_t m = 0; m < M; ++m) {
      d.assignment.alpha(u, m) = bits[q.alpha_index(u, m)];
      d.assignment.z(u, m) = bits[q.z_index(u, m)];
    }
  std::vector<std::uint8_t> w;
  for (auto i : q.w_index) w.push_back(bits[i]);
  d.mu_bar = encode_mu(w, q.encoding);
  d.mu = q.unscale(d.mu_bar);

  for (std::size_t u = 0; u < U; ++u) {
    int n = 0;
    bool active = false, bad6 = false, bad8 = false, bad9 = false;
    for (std::size_t m = 0; m < M; ++m) {
      bool al = d.assignment.alpha(u, m), zz = d.assignment.z(u, m);
      active = active || q.available(u, m);
      n += al;
      bad6 = bad6 || (al && !q.available(u, m));
      bad8 = bad8 || (zz && !q.computes[m]);
      bad9 = bad9 || (zz && !al);
    }
    if (bad6) d.violations.push_back({Family::Availability, u});
    if (active && n != 1) d.violations.push_back({Family::SingleAssociation, u, std::abs(n - 1.0)});
    if (bad8) d.violations.push_back({Family::SatelliteRelay, u});
    if (bad9) d.violations.push_back({Family::OffloadConsistency, u});
  }
  const double tol = q.encoding.resolution();
  for (const auto& sc : q.cuts) {
    double c = sc.constant;
    for (std::size_t u = 0; u < U; ++u)
      for (std::size_t m = 0; m < M; ++m)
        c += sc.alpha(u, m) * d.assignment.alpha(u, m) + sc.z(u, m) * d.assignment.z(u, m);
    if (d.mu_bar < c - tol) d.violations.push_back({Family::Cut, sc.source, c - d.mu_bar});
  }
  return d;
}

}  // namespace satin
