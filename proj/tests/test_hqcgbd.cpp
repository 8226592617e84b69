#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "satin/hqcgbd.hpp"
#include "satin/oracle.hpp"

using namespace satin;
using satin::testing::three_tier;

namespace {

SolverOptions options(double eps = 1e-5, std::uint64_t seed = 1) {
  SolverOptions o;
  o.control.V = 10;
  o.control.epsilon = eps;
  o.anneal.seed = seed;
  return o;
}

void expect_monotone(const SolveTrace& tr, double eps) {
  for (std::size_t i = 1; i < tr.iterations.size(); ++i) {
    EXPECT_LE(tr.iterations[i].ub, tr.iterations[i - 1].ub);
    EXPECT_GE(tr.iterations[i].lb, tr.iterations[i - 1].lb);
  }
  for (const auto& it : tr.iterations) EXPECT_LE(it.lb, it.ub + 1e-12 * std::abs(it.ub));
  if (tr.reason == Termination::Gap || tr.reason == Termination::GapUnconfirmed) { EXPECT_LE(tr.final_gap(), eps); }
}

}  // namespace

TEST(Hqcgbd, MatchesOracleOnSmallInstances) {
  auto cfg = three_tier(3);
  for (std::size_t t = 0; t < 6; ++t) {
    auto s = sample_slot(cfg, t, 11);
    QueueState q = satin::testing::varied_queue(3, t);
    OracleOptions oo;
    oo.V = 10;
    double phi = enumerate_optimal(cfg, s, q, oo).phi;
    auto opt = options(1e-5, t + 1);
    auto g = solve_slot_classical_gbd(cfg, s, q, opt);
    auto h = solve_slot_single_cut(cfg, s, q, opt);
    auto hm = solve_slot_multi_cut(cfg, s, q, opt);
    EXPECT_NEAR(g.phi(), phi, 1e-6 * std::abs(phi)) << "t=" << t;
    EXPECT_NEAR(h.phi(), phi, 1e-4 * std::abs(phi)) << "t=" << t;
    EXPECT_NEAR(hm.phi(), phi, 1e-4 * std::abs(phi)) << "t=" << t;
    for (const auto* r : {&g, &h, &hm}) {
      expect_monotone(r->trace, 1e-5);
      // Sandwich against the true optimum.
      for (const auto& it : r->trace.iterations) {
        EXPECT_GE(it.ub, phi - 1e-9 * std::abs(phi));
        EXPECT_LE(it.lb, phi + 1e-9 * std::abs(phi));
      }
    }
  }
}

TEST(Hqcgbd, RhoOneEqualsSingleCut) {
  auto cfg = three_tier(4);
  for (std::size_t t = 0; t < 4; ++t) {
    auto s = sample_slot(cfg, t, 3);
    QueueState q = satin::testing::varied_queue(3, t);
    auto opt = options(1e-4, 9 + t);
    auto single = solve_slot_single_cut(cfg, s, q, opt);
    opt.control.cuts_per_iteration = 1;
    auto multi = solve_slot_multi_cut(cfg, s, q, opt);
    ASSERT_EQ(single.trace.iteration_count(), multi.trace.iteration_count());
    for (std::size_t i = 0; i < single.trace.iterations.size(); ++i) {
      EXPECT_EQ(single.trace.iterations[i].ub, multi.trace.iterations[i].ub);
      EXPECT_EQ(single.trace.iterations[i].lb, multi.trace.iterations[i].lb);
      EXPECT_EQ(single.trace.iterations[i].cuts_total, multi.trace.iterations[i].cuts_total);
    }
    EXPECT_EQ(single.assignment(), multi.assignment());
    EXPECT_EQ(single.trace.reason, multi.trace.reason);
  }
}

TEST(Hqcgbd, ZeroToleranceOneIterationReturnsTheStart) {
  auto cfg = three_tier(4);
  auto s = sample_slot(cfg, 2, 8);
  QueueState q(3);
  auto opt = options(0.0);
  opt.control.max_iterations = 1;
  for (auto solve : {&solve_slot_classical_gbd}) {
    auto r = solve(cfg, s, q, opt);
    EXPECT_EQ(r.trace.iteration_count(), 1u);
    EXPECT_EQ(r.master.cuts.size(), 1u);
    EXPECT_EQ(r.assignment(), initial_assignment(cfg, s, MasterModel::build(cfg, s)));
  }
  auto r = solve_slot_single_cut(cfg, s, q, opt);
  EXPECT_EQ(r.master.cuts.size(), 1u);
  EXPECT_EQ(r.assignment(), initial_assignment(cfg, s, MasterModel::build(cfg, s)));
}

TEST(Hqcgbd, CutCountBookkeeping) {
  auto cfg = three_tier(4);
  for (std::size_t t = 0; t < 5; ++t) {
    auto s = sample_slot(cfg, t, 14);
    QueueState q = satin::testing::varied_queue(3, t);
    auto opt = options(1e-5, t);
    auto single = solve_slot_single_cut(cfg, s, q, opt);
    for (const auto& it : single.trace.iterations) EXPECT_EQ(it.cuts_total, it.l);
    auto multi = solve_slot_multi_cut(cfg, s, q, opt);
    std::size_t total = 0;
    for (const auto& it : multi.trace.iterations) {
      EXPECT_LE(it.cuts_added, opt.control.cuts_per_iteration);
      total += it.cuts_added;
      EXPECT_EQ(it.cuts_total, total);
      EXPECT_LE(it.cuts_total, opt.control.cuts_per_iteration * it.l);
    }
    // One cut per distinct evaluated assignment: no duplicate seeds counted.
    EXPECT_EQ(multi.master.cuts.size(), multi.evaluated);
  }
}

TEST(Hqcgbd, IncumbentReevaluatesToUpperBound) {
  auto cfg = three_tier(4);
  for (std::size_t t = 0; t < 6; ++t) {
    auto s = sample_slot(cfg, t, 15);
    QueueState q = satin::testing::varied_queue(3, t);
    auto opt = options(1e-3, t);
    for (auto r : {solve_slot_single_cut(cfg, s, q, opt), solve_slot_multi_cut(cfg, s, q, opt),
                   solve_slot_classical_gbd(cfg, s, q, opt)}) {
      double phi = drift_penalty_value(cfg, s, r.assignment(), r.allocation(), q, 10);
      EXPECT_NEAR(phi, r.trace.iterations.back().ub, 1e-9 * std::abs(phi));
      EXPECT_NEAR(phi, r.phi(), 1e-9 * std::abs(phi));
    }
  }
}

TEST(Hqcgbd, OptimalStartKeepsUpperBoundConstant) {
  NetworkConfig cfg;
  cfg.user_count = 1;
  cfg.aps = {satin::testing::bs_at(0, 0)};
  cfg.aps[0].blockage_prob = 0;
  auto s = sample_slot(cfg, 0, 2);
  QueueState q(1);
  auto opt = options(1e-6);
  auto r = solve_slot_single_cut(cfg, s, q, opt);
  ASSERT_TRUE(r.assignment().z(0, 0));  // onboard at full speed beats the cloud path here
  for (const auto& it : r.trace.iterations) EXPECT_EQ(it.ub, r.trace.iterations.front().ub);
  EXPECT_LE(r.trace.final_gap(), 1e-6);
}

TEST(Hqcgbd, SingleFeasibleAssignmentConvergesAtOnce) {
  NetworkConfig cfg;
  cfg.user_count = 2;
  cfg.aps = {satin::testing::satellite()};
  auto s = sample_slot(cfg, 0, 2);
  QueueState q(1);
  for (auto r : {solve_slot_classical_gbd(cfg, s, q, options()), solve_slot_single_cut(cfg, s, q, options())}) {
    EXPECT_EQ(r.trace.iteration_count(), 1u);
    EXPECT_LE(r.trace.final_gap(), 1e-9);
  }
}

TEST(Hqcgbd, BoundsMonotoneAcrossCorpus) {
  auto e = satin::testing::downsized();
  for (std::size_t t = 0; t < 8; ++t) {
    auto s = sample_slot(e.network, t, 5);
    QueueState q = satin::testing::varied_queue(e.network.ap_count(), t);
    auto opt = options(1e-3, t);
    expect_monotone(solve_slot_single_cut(e.network, s, q, opt).trace, 1e-3);
    expect_monotone(solve_slot_multi_cut(e.network, s, q, opt).trace, 1e-3);
    expect_monotone(solve_slot_classical_gbd(e.network, s, q, opt).trace, 1e-3);
  }
}

TEST(Hqcgbd, InvalidControlRejected) {
  auto cfg = three_tier(2);
  auto s = sample_slot(cfg, 0, 1);
  auto opt = options();
  opt.control.max_iterations = 0;
  EXPECT_THROW(solve_slot_single_cut(cfg, s, QueueState(3), opt), ConfigError);
}
