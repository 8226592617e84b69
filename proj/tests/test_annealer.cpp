#include <gtest/gtest.h>

#include <set>

#include "fixtures.hpp"
#include "satin/annealer.hpp"

using namespace satin;
using satin::testing::bits_of;
using satin::testing::brute_energy;

namespace {

AnnealParams params(std::size_t reads, std::size_t sweeps, std::uint64_t seed) {
  AnnealParams p;
  p.num_reads = reads;
  p.sweeps = sweeps;
  p.seed = seed;
  return p;
}

double exhaustive_min(const Qubo& q) {
  double best = kInf;
  for (std::uint64_t c = 0; c < (std::uint64_t{1} << q.num_vars); ++c) best = std::min(best, brute_energy(q, bits_of(c, q.num_vars)));
  return best;
}

}  // namespace

TEST(Anneal, SingleVariable) {
  Qubo q;
  q.num_vars = 1;
  q.add(0, 0, -1);
  auto s = SimulatedAnnealer().sample(q, params(10, 50, 1));
  EXPECT_EQ(s.front().bits, std::vector<std::uint8_t>{1});
  EXPECT_EQ(s.front().energy, -1.0);
}

TEST(Anneal, TwoVariableCoupling) {
  Qubo q;
  q.num_vars = 2;
  q.add(0, 0, 1);
  q.add(1, 1, 1);
  q.add(0, 1, -3);
  EXPECT_EQ(exhaustive_min(q), -1.0);
  auto s = SimulatedAnnealer().sample(q, params(10, 50, 2));
  EXPECT_EQ(s.front().bits, (std::vector<std::uint8_t>{1, 1}));
  EXPECT_EQ(s.front().energy, -1.0);
}

TEST(Anneal, SixteenVariableGroundStateRate) {
  int hits = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    auto q = satin::testing::random_qubo(16, 500 + trial);
    double ground = exhaustive_min(q);
    auto s = SimulatedAnnealer().sample(q, params(200, 2000, trial + 1));
    hits += std::abs(s.front().energy - ground) <= 1e-9;
  }
  EXPECT_GE(hits, 95);
}

TEST(Anneal, EnergiesAreExactAndSorted) {
  auto q = satin::testing::random_qubo(20, 7);
  auto p = params(50, 100, 3);
  p.greedy_finish = false;
  auto s = SimulatedAnnealer().sample(q, p);
  ASSERT_EQ(s.size(), 50u);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_NEAR(s[i].energy, brute_energy(q, s[i].bits), 1e-9);
    if (i > 0) {
      EXPECT_LE(s[i - 1].energy, s[i].energy);
      if (s[i - 1].energy == s[i].energy) { EXPECT_LT(s[i - 1].read, s[i].read); }
    }
  }
}

TEST(Anneal, Deterministic) {
  auto q = satin::testing::random_qubo(18, 8);
  auto p = params(30, 200, 11);
  p.auto_beta = true;
  auto a = SimulatedAnnealer().sample(q, p), b = SimulatedAnnealer().sample(q, p);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].bits, b[i].bits);
    EXPECT_EQ(a[i].energy, b[i].energy);
    EXPECT_EQ(a[i].read, b[i].read);
  }
}

TEST(Anneal, RejectsBadParams) {
  auto q = satin::testing::random_qubo(4, 1);
  auto p = params(1, 10, 1);
  p.beta_start = 5;
  p.beta_end = 1;
  EXPECT_THROW(SimulatedAnnealer().sample(q, p), ConfigError);
  EXPECT_THROW(SimulatedAnnealer().sample(q, params(0, 10, 1)), ConfigError);
  Qubo empty;
  EXPECT_THROW(SimulatedAnnealer().sample(empty, params(1, 10, 1)), std::invalid_argument);
}

TEST(Anneal, ScheduleIsGeometric) {
  auto p = params(1, 5, 1);
  p.beta_start = 0.1;
  p.beta_end = 10;
  auto b = p.schedule();
  ASSERT_EQ(b.size(), 5u);
  EXPECT_DOUBLE_EQ(b.front(), 0.1);
  EXPECT_NEAR(b.back(), 10, 1e-12);
  for (std::size_t i = 1; i < b.size(); ++i) EXPECT_NEAR(b[i] / b[i - 1], std::sqrt(10.0), 1e-12);
}

TEST(Exhaustive, ReturnsLowestStatesInOrder) {
  auto q = satin::testing::random_qubo(10, 9);
  auto s = ExhaustiveSampler().sample(q, params(5, 1, 1));
  ASSERT_EQ(s.size(), 5u);
  std::vector<double> all;
  for (std::uint64_t c = 0; c < 1024; ++c) all.push_back(brute_energy(q, bits_of(c, 10)));
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(s[i].energy, all[i], 1e-12);
  EXPECT_THROW(ExhaustiveSampler(8).sample(q, params(1, 1, 1)), SizeCapExceeded);
}

TEST(RemoteAnnealer, StubNeedsTransport) {
  auto q = satin::testing::random_qubo(3, 1);
  EXPECT_THROW(RemoteAnnealer("qpu").sample(q, params(1, 1, 1)), std::runtime_error);
  RemoteAnnealer fake("qpu", [](const RemoteAnnealRequest& r) {
    RemoteAnnealResponse resp;
    resp.samples.push_back({std::vector<std::uint8_t>(r.model.num_vars, 1), 0.0, 0});
    resp.samples.push_back({std::vector<std::uint8_t>(r.model.num_vars, 0), 0.0, 1});
    return resp;
  });
  auto s = fake.sample(q, params(2, 1, 1));
  for (const auto& x : s) EXPECT_NEAR(x.energy, brute_energy(q, x.bits), 1e-12);
  EXPECT_LE(s[0].energy, s[1].energy);
}

namespace {

// Small compiled master: 2 users, BS + satellite, one cut.
QuboModel small_model() {
  NetworkConfig cfg;
  cfg.user_count = 2;
  cfg.aps = {satin::testing::bs_at(0, 0), satin::testing::satellite()};
  auto s = sample_slot(cfg, 0, 4);
  for (std::size_t u = 0; u < 2; ++u) s.available(u, 0) = s.available(u, 1) = 1;
  auto mm = MasterModel::build(cfg, s);
  SubproblemOptions so;
  so.V = 10;
  auto a = Assignment::from_choices({{0, true}, {1, false}}, 2);
  mm.add_cut(make_cut(cfg, s, solve_subproblem(cfg, s, a, QueueState(2), so)));
  CompileOptions co;
  co.encoding = {2, 2, 0};
  co.mu_ceiling = mm.cuts[0].origin_value + 1e3;  // keeps every decode clear of the cut
  return compile_qubo(mm, co);
}

Sample sample_of(const QuboModel& q, std::vector<std::uint8_t> bits, std::size_t read) {
  Sample s;
  s.energy = q.energy(bits);
  s.bits = std::move(bits);
  s.read = read;
  return s;
}

std::vector<std::uint8_t> encode(const QuboModel& q, const Assignment& a) {
  std::vector<std::uint8_t> x(q.num_vars, 0);
  for (std::size_t u = 0; u < q.users(); ++u)
    for (std::size_t m = 0; m < q.aps(); ++m) {
      x[q.alpha_index(u, m)] = a.alpha(u, m);
      x[q.z_index(u, m)] = a.z(u, m);
    }
  for (auto i : q.w_index) x[i] = 1;  // mu_bar at the top of the range
  return x;
}

}  // namespace

TEST(TopRho, IdenticalSamplesCollapse) {
  auto q = small_model();
  auto x = encode(q, Assignment::from_choices({{0, false}, {0, true}}, 2));
  std::vector<Sample> pool{sample_of(q, x, 0), sample_of(q, x, 1), sample_of(q, x, 2)};
  EXPECT_EQ(top_rho_feasible(pool, q, 5).size(), 1u);
}

TEST(TopRho, RhoOneIsLowestFeasible) {
  auto q = small_model();
  std::vector<Sample> pool;
  auto bad = encode(q, Assignment::from_choices({{0, false}, {0, false}}, 2));
  bad[q.alpha_index(0, 1)] = 1;
  pool.push_back(sample_of(q, bad, 0));
  pool.push_back(sample_of(q, encode(q, Assignment::from_choices({{1, false}, {0, false}}, 2)), 1));
  pool.push_back(sample_of(q, encode(q, Assignment::from_choices({{0, true}, {0, false}}, 2)), 2));
  detail::sort_samples(pool);
  auto top = top_rho_feasible(pool, q, 1);
  ASSERT_EQ(top.size(), 1u);
  for (const auto& s : pool) {
    auto d = decode_sample(q, s.bits);
    if (d.feasible()) {
      EXPECT_EQ(top[0], d.assignment);
      break;
    }
  }
}

TEST(TopRho, MatchesReferenceFilter) {
  auto q = small_model();
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Sample> pool;
    for (std::size_t r = 0; r < 40; ++r) {
      std::vector<Choice> pick(2);
      for (auto& c : pick) {
        int k = static_cast<int>(rng() % 3);
        c = k == 0 ? Choice{0, false} : k == 1 ? Choice{0, true} : Choice{1, false};
      }
      auto x = encode(q, Assignment::from_choices(pick, 2));
      if (rng() % 3 == 0) x[q.alpha_index(rng() % 2, rng() % 2)] ^= 1;  // often infeasible
      if (rng() % 5 == 0) x[q.z_index(rng() % 2, 1)] = 1;
      pool.push_back(sample_of(q, x, r));
    }
    detail::sort_samples(pool);
    std::size_t rho = 1 + rng() % 5;
    // Reference: independent rule check, then dedup, then truncate.
    std::vector<Assignment> ref;
    for (const auto& s : pool) {
      Assignment a(2, 2);
      for (std::size_t u = 0; u < 2; ++u)
        for (std::size_t m = 0; m < 2; ++m) {
          a.alpha(u, m) = s.bits[q.alpha_index(u, m)];
          a.z(u, m) = s.bits[q.z_index(u, m)];
        }
      if (!satin::testing::check_rules(q.available, q.computes, a).ok()) continue;
      if (std::find(ref.begin(), ref.end(), a) == ref.end()) ref.push_back(a);
    }
    if (ref.size() > rho) ref.resize(rho);
    if (ref.empty()) {
      EXPECT_THROW(top_rho_feasible(pool, q, rho), NoFeasibleSample);
      continue;
    }
    EXPECT_EQ(top_rho_feasible(pool, q, rho), ref);
  }
}

TEST(TopRho, NoFeasibleThrows) {
  auto q = small_model();
  auto bad = encode(q, Assignment(2, 2));  // nobody associated
  std::vector<Sample> pool{sample_of(q, bad, 0)};
  EXPECT_THROW(top_rho_feasible(pool, q, 3), NoFeasibleSample);
}

TEST(SolveCompiledMaster, EscalationRestoresFeasibility) {
  // One user, two computing APs. Onboard at either AP is worth 4 less than
  // cloud, so with a low mu floor, z without alpha undercuts every valid state.
  MasterModel mm;
  mm.users = 1;
  mm.aps = 2;
  mm.available = Grid<std::uint8_t>(1, 2, 1);
  mm.computes = {1, 1};
  mm.max_associated = {1, 1};
  mm.max_onboard = {1, 1};
  mm.relay_energy = Grid<double>(1, 2, 0.0);
  mm.onboard_min_energy = Grid<double>(1, 2, 0.0);
  mm.energy_budget = {1, 1};
  BendersCut c;
  c.a = Grid<double>(1, 2, 5.0);
  c.b = Grid<double>(1, 2, -4.0);
  c.q = Grid<double>(1, 2, 0.0);
  c.origin = Assignment::from_choices({{0, false}}, 2);
  c.origin_value = 5;
  mm.add_cut(c);
  CompileOptions co;
  co.encoding = {2, 2, 0};
  co.mu_floor = -10;
  co.mu_ceiling = 5;
  co.penalties = {1e-3, 1e-3, 1e-3, 1e-3, 0};  // far too weak
  AnnealParams one;
  one.num_reads = 1;
  ExhaustiveSampler exact(22);
  auto weak = decode_sample(compile_qubo(mm, co), exact.sample(compile_qubo(mm, co), one).front().bits);
  ASSERT_FALSE(weak.feasible());
  auto r = solve_compiled_master(mm, co, exact, one, 8);
  EXPECT_GT(r.escalations, 0u);
  EXPECT_TRUE(r.decoded.feasible());
  EXPECT_TRUE(r.decoded.assignment.z(0, 0) || r.decoded.assignment.z(0, 1));
}
