#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "satin/master.hpp"
#include "satin/subproblem.hpp"

using namespace satin;
using satin::testing::three_tier;

namespace {

SlotState fixed_slot(std::size_t users, std::size_t aps, double gain = 1e-10, double bits = 2e6, double cpb = 300) {
  SlotState s;
  s.available = Grid<std::uint8_t>(users, aps, 1);
  s.gain = Grid<double>(users, aps, gain);
  s.data_bits.assign(users, bits);
  s.cycles_per_bit.assign(users, cpb);
  return s;
}

NetworkConfig single_bs() {
  NetworkConfig cfg;
  cfg.aps = {satin::testing::bs_at(0, 0)};
  cfg.validate();
  return cfg;
}

SubproblemOptions with_v(double V, bool hard = false) {
  SubproblemOptions o;
  o.V = V;
  o.hard_energy_budget = hard;
  return o;
}

// Random structurally valid assignment for a slot.
Assignment random_assignment(const MasterModel& mm, std::mt19937_64& rng) {
  for (;;) {
    std::vector<Choice> pick(mm.users);
    for (std::size_t u = 0; u < mm.users; ++u) {
      auto opts = mm.options(u);
      pick[u] = opts[rng() % opts.size()];
    }
    auto a = Assignment::from_choices(pick, mm.aps);
    if (mm.feasible(a)) return a;
  }
}

}  // namespace

TEST(Subproblem, SingleUserZeroQueueTakesTheBoxMaxima) {
  auto cfg = single_bs();
  auto s = fixed_slot(1, 1);
  auto a = Assignment::from_choices({{0, true}}, 1);
  auto sol = solve_subproblem(cfg, s, a, QueueState(1), with_v(10));
  EXPECT_NEAR(sol.allocation.beta(0, 0), cfg.aps[0].beta_max, 1e-12);
  EXPECT_NEAR(sol.allocation.f(0, 0), cfg.aps[0].f_cap(), 1e-3);
  EXPECT_NEAR(sol.allocation.tau_cp(0, 0), 2e6 * 300 / cfg.aps[0].f_cap(), 1e-12);
  EXPECT_EQ(sol.allocation.tau_txc(0, 0), 0.0);
}

TEST(Subproblem, TwoIdenticalUsersSplitBandwidth) {
  auto cfg = single_bs();
  auto s = fixed_slot(2, 1);
  auto a = Assignment::from_choices({{0, false}, {0, false}}, 1);
  auto sol = solve_subproblem(cfg, s, a, QueueState(1), with_v(10));
  EXPECT_NEAR(sol.allocation.beta(0, 0), 0.5, 1e-9);
  EXPECT_NEAR(sol.allocation.beta(1, 0), 0.5, 1e-9);
  EXPECT_GT(sol.ap_duals[0].bandwidth_price, 0);
}

TEST(Subproblem, InteriorCpuMatchesClosedFormAndGrid) {
  auto cfg = single_bs();
  auto s = fixed_slot(1, 1);
  auto a = Assignment::from_choices({{0, true}}, 1);
  const double V = 10, kappa = cfg.aps[0].switched_capacitance, Q = 6.25;
  QueueState q(1);
  q.backlog[0] = Q;
  auto sol = solve_subproblem(cfg, s, a, q, with_v(V));
  double closed = std::cbrt(V / (2 * Q * kappa));
  closed = std::clamp(closed, cfg.aps[0].f_min_hz, cfg.aps[0].f_cap());
  ASSERT_GT(closed, cfg.aps[0].f_min_hz);
  ASSERT_LT(closed, cfg.aps[0].f_cap());
  EXPECT_NEAR(sol.allocation.f(0, 0), closed, 1e-9 * closed);

  const double w = 2e6 * 300, lo = cfg.aps[0].f_min_hz, hi = cfg.aps[0].f_cap();
  double best_f = lo, best = kInf;
  const int n = 1000000;
  for (int i = 0; i <= n; ++i) {
    double f = lo + (hi - lo) * i / n;
    double v = V * w / f + Q * kappa * w * f * f;
    if (v < best) {
      best = v;
      best_f = f;
    }
  }
  EXPECT_NEAR(sol.allocation.f(0, 0), best_f, 1e-4 * best_f);
}

TEST(Subproblem, KktAndObjectiveAgreementOnRandomSolves) {
  auto cfg = three_tier(4);
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> qd(0, 4), vd(0.5, 50);
  double worst_kkt = 0, worst_phi = 0;
  for (int i = 0; i < 300; ++i) {
    auto s = sample_slot(cfg, i, 5);
    auto mm = MasterModel::build(cfg, s);
    auto a = random_assignment(mm, rng);
    QueueState q(3);
    for (auto& b : q.backlog) b = qd(rng);
    double V = vd(rng);
    auto sol = solve_subproblem(cfg, s, a, q, with_v(V));
    worst_kkt = std::max(worst_kkt, sol.kkt.max());
    double phi = drift_penalty_value(cfg, s, a, sol.allocation, q, V);
    worst_phi = std::max(worst_phi, std::abs(phi - sol.phi) / std::abs(phi));
    for (std::size_t m = 0; m < 3; ++m) {
      double sb = 0, sf = 0;
      for (std::size_t u = 0; u < 4; ++u) {
        sb += sol.allocation.beta(u, m);
        sf += sol.allocation.f(u, m);
      }
      EXPECT_LE(sb, 1 + 1e-9);
      EXPECT_LE(sf, cfg.aps[m].max_cpu_hz + 1e-3);
    }
  }
  EXPECT_LE(worst_kkt, 1e-7);
  EXPECT_LE(worst_phi, 1e-9);
}

TEST(Subproblem, HardBudgetRespectsEnergy) {
  auto cfg = three_tier(4);
  for (auto& ap : cfg.aps) ap.energy_budget_j = 0.6;
  std::mt19937_64 rng(5);
  int binding = 0;
  for (int i = 0; i < 100; ++i) {
    auto s = sample_slot(cfg, i, 6);
    auto mm = MasterModel::build(cfg, s, true);
    auto a = random_assignment(mm, rng);
    auto sol = solve_subproblem(cfg, s, a, QueueState(3), with_v(10, true));
    for (std::size_t m = 0; m < 3; ++m) {
      EXPECT_LE(sol.ap_energy[m], cfg.aps[m].energy_budget_j * (1 + 1e-9));
      binding += sol.ap_duals[m].energy_price > 0;
    }
    EXPECT_LE(sol.kkt.max(), 1e-7);
  }
  EXPECT_GT(binding, 0);
}

TEST(Subproblem, BoxMinimaOverCapacityThrow) {
  auto cfg = single_bs();
  cfg.aps[0].beta_min = 0.4;
  auto s = fixed_slot(3, 1);
  auto a = Assignment::from_choices({{0, false}, {0, false}, {0, false}}, 1);
  EXPECT_THROW(solve_subproblem(cfg, s, a, QueueState(1), with_v(10)), InfeasibleAssignment);
  auto sat_onboard = Assignment::from_choices({{0, false}}, 1);
  sat_onboard.z(0, 0) = 1;
  sat_onboard.alpha(0, 0) = 0;
  EXPECT_THROW(solve_subproblem(cfg, fixed_slot(1, 1), sat_onboard, QueueState(1), with_v(10)), InfeasibleAssignment);
}

TEST(BendersCut, TightAtOriginAndValidElsewhere) {
  auto cfg = three_tier(3);
  std::mt19937_64 rng(19);
  for (std::uint64_t inst = 0; inst < 20; ++inst) {
    auto s = sample_slot(cfg, inst, 31);
    auto mm = MasterModel::build(cfg, s);
    QueueState q(3);
    q.backlog = {0.4 * inst, 1.0, 0.2};
    auto origin = random_assignment(mm, rng);
    auto sol = solve_subproblem(cfg, s, origin, q, with_v(10));
    auto cut = make_cut(cfg, s, sol);
    EXPECT_NEAR(cut.evaluate(origin), sol.phi, 1e-6 * std::abs(sol.phi));
    for (int k = 0; k < 20; ++k) {
      auto other = random_assignment(mm, rng);
      double v = solve_subproblem(cfg, s, other, q, with_v(10)).phi;
      EXPECT_LE(cut.evaluate(other), v + 1e-6 * std::abs(v));
    }
  }
}

TEST(BendersCut, ZeroDualsLeaveTheExplicitTerms) {
  auto cfg = single_bs();
  cfg.aps[0].beta_max = 0.5;
  cfg.aps[0].f_max_hz = 3e9;
  auto s = fixed_slot(1, 1);
  QueueState q(1);
  q.backlog[0] = 0.5;
  auto sol = solve_subproblem(cfg, s, Assignment::from_choices({{0, true}}, 1), q, with_v(10));
  ASSERT_EQ(sol.ap_duals[0].bandwidth_price, 0.0);
  ASSERT_EQ(sol.ap_duals[0].cpu_price, 0.0);
  auto cut = make_cut(cfg, s, sol);
  const auto& ap = cfg.aps[0];
  const double V = 10, D = 2e6, w = D * 300;
  double up = V * D / data_rate(0.5, ap, 1e-10, cfg);
  double relay = D / ap.backhaul_bps;
  double cloud = V * (relay + w / cfg.cloud_cpu_hz) + 0.5 * ap.tx_power_w() * relay;
  double f = sol.allocation.f(0, 0);
  EXPECT_NEAR(cut.constant, -0.5 * ap.energy_budget_j, 1e-12);
  EXPECT_NEAR(cut.a(0, 0), up + cloud, 1e-9 * (up + cloud));
  EXPECT_NEAR(cut.b(0, 0), V * w / f + 0.5 * ap.switched_capacitance * f * f * w, 1e-9 * cut.b(0, 0));
  EXPECT_NEAR(cut.q(0, 0), -cloud, 1e-9 * cloud);
}

TEST(BendersCut, EnumeratedLowerBoundOnSmallInstances) {
  auto cfg = three_tier(3);
  for (std::uint64_t inst = 0; inst < 5; ++inst) {
    auto s = sample_slot(cfg, inst, 77);
    auto mm = MasterModel::build(cfg, s);
    QueueState q = satin::testing::varied_queue(3, inst);
    std::vector<std::pair<Assignment, double>> table;
    for_each_feasible(mm, [&](const Assignment& a) { table.push_back({a, solve_subproblem(cfg, s, a, q, with_v(10)).phi}); });
    ASSERT_LE(table.size(), 512u);
    for (std::size_t k = 0; k < table.size(); k += 7) {
      auto cut = make_cut(cfg, s, solve_subproblem(cfg, s, table[k].first, q, with_v(10)));
      for (const auto& [a, phi] : table) EXPECT_LE(cut.evaluate(a), phi + 1e-6 * std::abs(phi));
    }
  }
}
