// Samplers for QUBO models: single-bit-flip simulated annealing, an
// exhaustive backend for small models, and a remote-annealer client stub.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "satin/master.hpp"

namespace satin {

struct AnnealParams {
  std::size_t num_reads = 200;
  std::size_t sweeps = 2000;
  double beta_start = 0.1;
  double beta_end = 10.0;
  std::uint64_t seed = 1;
  bool greedy_finish = true;  // zero-temperature descent after the schedule
  /// Derive the range from the model: the hot end accepts the largest
  /// single-flip increase with probability 1/2, the cold end accepts the
  /// smallest one with probability 1/100. beta_start/beta_end are ignored.
  bool auto_beta = false;

  void validate() const {
    if (num_reads < 1) throw ConfigError("anneal.num_reads: must be >= 1");
    if (sweeps < 1) throw ConfigError("anneal.sweeps: must be >= 1");
    if (!(beta_start > 0 && beta_start < beta_end)) throw ConfigError("anneal.beta: need 0 < beta_start < beta_end");
  }

  /// Geometric inverse-temperature schedule, one value per sweep.
  std::vector<double> schedule() const { return schedule(beta_start, beta_end); }

  std::vector<double> schedule(double hot, double cold) const {
    std::vector<double> b(sweeps);
    if (sweeps == 1) {
      b[0] = cold;
      return b;
    }
    double r = std::pow(cold / hot, 1.0 / static_cast<double>(sweeps - 1));
    double v = hot;
    for (auto& x : b) {
      x = v;
      v *= r;
    }
    return b;
  }
};

struct Sample {
  std::vector<std::uint8_t> bits;
  double energy = 0;
  std::size_t read = 0;
};

class Sampler {
 public:
  virtual ~Sampler() = default;
  /// Samples sorted by ascending energy, ties by read index.
  virtual std::vector<Sample> sample(const Qubo& q, const AnnealParams& p) const = 0;
  virtual std::string name() const = 0;
};

namespace detail {

/// Compressed adjacency: diagonal plus symmetric off-diagonal lists.
struct Adjacency {
  std::vector<double> diag;
  std::vector<std::size_t> start;
  std::vector<std::size_t> nbr;
  std::vector<double> weight;

  explicit Adjacency(const Qubo& q) : diag(q.num_vars, 0.0), start(q.num_vars + 1, 0) {
    std::vector<std::size_t> deg(q.num_vars, 0);
    for (const auto& [ij, c] : q.terms)
      if (ij.first != ij.second) {
        ++deg[ij.first];
        ++deg[ij.second];
      }
    for (std::size_t i = 0; i < q.num_vars; ++i) start[i + 1] = start[i] + deg[i];
    nbr.resize(start.back());
    weight.resize(start.back());
    std::vector<std::size_t> fill(start.begin(), start.end() - 1);
    for (const auto& [ij, c] : q.terms) {
      auto [i, j] = ij;
      if (i == j) {
        diag[i] += c;
        continue;
      }
      nbr[fill[i]] = j;
      weight[fill[i]++] = c;
      nbr[fill[j]] = i;
      weight[fill[j]++] = c;
    }
  }

  /// (largest, smallest nonzero) bound on a single-flip energy change.
  std::pair<double, double> delta_range() const {
    double hi = 0, lo = kInf;
    for (std::size_t i = 0; i < diag.size(); ++i) {
      double d = std::abs(diag[i]);
      if (d > 0) lo = std::min(lo, d);
      for (std::size_t e = start[i]; e < start[i + 1]; ++e) {
        d += std::abs(weight[e]);
        if (weight[e] != 0) lo = std::min(lo, std::abs(weight[e]));
      }
      hi = std::max(hi, d);
    }
    if (hi == 0) hi = lo = 1;
    return {hi, std::min(lo, hi)};
  }

  /// field_i = dE/dx_i at the current state (x_i excluded).
  std::vector<double> fields(const std::vector<std::uint8_t>& x) const {
    std::vector<double> f(diag);
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t e = start[i]; e < start[i + 1]; ++e)
        if (x[nbr[e]]) f[i] += weight[e];
    return f;
  }

  void flip(std::vector<std::uint8_t>& x, std::vector<double>& field, std::size_t i) const {
    double d = x[i] ? -1.0 : 1.0;
    x[i] ^= 1;
    for (std::size_t e = start[i]; e < start[i + 1]; ++e) field[nbr[e]] += d * weight[e];
  }
};

inline void sort_samples(std::vector<Sample>& s) {
  std::stable_sort(s.begin(), s.end(), [](const Sample& a, const Sample& b) {
    return a.energy < b.energy || (a.energy == b.energy && a.read < b.read);
  });
}

}  // namespace detail

class SimulatedAnnealer : public Sampler {
 public:
  std::vector<Sample> sample(const Qubo& q, const AnnealParams& p) const override {
    p.validate();
    if (q.num_vars == 0) throw std::invalid_argument("anneal: empty model");
    const std::size_t n = q.num_vars;
    detail::Adjacency adj(q);
    std::vector<double> betas;
    if (p.auto_beta) {
      auto [hi, lo] = adj.delta_range();
      betas = p.schedule(std::log(2.0) / hi, std::log(100.0) / lo);
    } else {
      betas = p.schedule();
    }
    std::vector<Sample> out;
    out.reserve(p.num_reads);
    for (std::size_t r = 0; r < p.num_reads; ++r) {
      std::mt19937_64 rng(stream_seed(p.seed, 0x616e6e65616cULL, r));
      auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
      std::vector<std::uint8_t> x(n);
      for (auto& b : x) b = static_cast<std::uint8_t>(rng() & 1);
      auto field = adj.fields(x);
      for (double beta : betas) {
        for (std::size_t i = 0; i < n; ++i) {
          double dE = x[i] ? -field[i] : field[i];
          if (dE <= 0) {
            adj.flip(x, field, i);
            continue;
          }
          double arg = beta * dE;
          if (arg < 36.0 && unit() < std::exp(-arg)) adj.flip(x, field, i);
        }
      }
      if (p.greedy_finish) {
        for (bool improved = true; improved;) {
          improved = false;
          for (std::size_t i = 0; i < n; ++i) {
            double dE = x[i] ? -field[i] : field[i];
            if (dE < -1e-12) {
              adj.flip(x, field, i);
              improved = true;
            }
          }
        }
      }
      Sample s;
      s.energy = q.energy(x);  // full re-evaluation, no accumulated drift
      s.bits = std::move(x);
      s.read = r;
      out.push_back(std::move(s));
    }
    detail::sort_samples(out);
    return out;
  }
  std::string name() const override { return "simulated-annealing"; }
};

/// Enumerates every bitstring; returns the num_reads lowest-energy states.
class ExhaustiveSampler : public Sampler {
 public:
  explicit ExhaustiveSampler(std::size_t max_vars = 24) : max_vars_(max_vars) {}

  std::vector<Sample> sample(const Qubo& q, const AnnealParams& p) const override {
    const std::size_t n = q.num_vars;
    if (n > max_vars_) throw SizeCapExceeded("exhaustive sampler: " + std::to_string(n) + " variables");
    detail::Adjacency adj(q);
    std::vector<std::uint8_t> x(n, 0);
    auto field = adj.fields(x);
    double e = q.offset;
    using Entry = std::pair<double, std::uint64_t>;
    std::priority_queue<Entry> keep;  // max-heap of the best num_reads
    auto offer = [&](double energy, std::uint64_t code) {
      if (keep.size() < p.num_reads) keep.push({energy, code});
      else if (Entry{energy, code} < keep.top()) {
        keep.pop();
        keep.push({energy, code});
      }
    };
    // Gray-code walk: one flip per step, code tracks the state as an integer.
    std::uint64_t code = 0;
    offer(e, code);
    const std::uint64_t total = n == 0 ? 1 : (std::uint64_t{1} << n);
    for (std::uint64_t k = 1; k < total; ++k) {
      std::size_t i = static_cast<std::size_t>(std::countr_zero(k));
      e += x[i] ? -field[i] : field[i];
      adj.flip(x, field, i);
      code ^= std::uint64_t{1} << i;
      offer(e, code);
    }
    std::vector<Sample> out;
    while (!keep.empty()) {
      auto [energy, c] = keep.top();
      keep.pop();
      Sample s;
      s.bits.resize(n);
      for (std::size_t i = 0; i < n; ++i) s.bits[i] = (c >> i) & 1;
      s.energy = q.energy(s.bits);
      out.push_back(std::move(s));
    }
    std::reverse(out.begin(), out.end());
    std::stable_sort(out.begin(), out.end(), [](const Sample& a, const Sample& b) { return a.energy < b.energy; });
    for (std::size_t r = 0; r < out.size(); ++r) out[r].read = r;
    return out;
  }
  std::string name() const override { return "exhaustive"; }

 private:
  std::size_t max_vars_;
};

struct RemoteAnnealRequest {
  Qubo model;
  AnnealParams params;
  std::string solver;
};

struct RemoteAnnealResponse {
  std::vector<Sample> samples;
  double access_time_ms = 0;
};

/// Hardware or cloud annealer backend. Only the request/response contract is
/// defined; a transport must be supplied by the caller.
class RemoteAnnealer : public Sampler {
 public:
  using Transport = std::function<RemoteAnnealResponse(const RemoteAnnealRequest&)>;

  explicit RemoteAnnealer(std::string solver, Transport transport = {})
      : solver_(std::move(solver)), transport_(std::move(transport)) {}

  std::vector<Sample> sample(const Qubo& q, const AnnealParams& p) const override {
    if (!transport_) throw std::runtime_error("remote annealer '" + solver_ + "': no transport configured");
    auto resp = transport_({q, p, solver_});
    for (auto& s : resp.samples) s.energy = q.energy(s.bits);
    detail::sort_samples(resp.samples);
    return resp.samples;
  }
  std::string name() const override { return "remote:" + solver_; }

 private:
  std::string solver_;
  Transport transport_;
};

/// Decodes samples in energy order and keeps up to rho distinct assignments
/// whose feasibility report is clean.
inline std::vector<Assignment> top_rho_feasible(const std::vector<Sample>& samples, const QuboModel& q,
                                                std::size_t rho) {
  std::vector<Assignment> out;
  std::set<Assignment> seen;
  for (const auto& s : samples) {
    if (out.size() >= rho) break;
    auto d = decode_sample(q, s.bits);
    if (!d.feasible()) continue;
    if (seen.insert(d.assignment).second) out.push_back(d.assignment);
  }
  if (out.empty()) throw NoFeasibleSample("no sample decodes to a feasible assignment");
  return out;
}

struct EscalatedSolve {
  QuboModel model;
  Sample best;
  DecodedSample decoded;
  std::size_t escalations = 0;
};

/// Compiles and samples the master. While the lowest-energy sample violates
/// some family, multiplies that family's weight by 10 and recompiles.
inline EscalatedSolve solve_compiled_master(const MasterModel& mm, CompileOptions co, const Sampler& sampler,
                                            const AnnealParams& p, std::size_t max_escalations = 3) {
  EscalatedSolve r;
  for (;;) {
    r.model = compile_qubo(mm, co);
    r.best = sampler.sample(r.model, p).front();
    r.decoded = decode_sample(r.model, r.best.bits);
    if (r.decoded.feasible() || r.escalations >= max_escalations) return r;
    ++r.escalations;
    for (const auto& v : r.decoded.violations) co.penalties[v.family] = 10.0 * r.model.zeta[v.family];
  }
}

}  // namespace satin
