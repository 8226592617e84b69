// Command-line driver: simulate, sweep-v, solve-slot, oracle, export-qubo, anneal.
// Exit codes: 0 success, 2 invalid input, 3 solver failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "satin/io.hpp"
#include "satin/oracle.hpp"
#include "satin/simulation.hpp"

namespace fs = std::filesystem;
using namespace satin;

namespace {

bool verbose() {
  const char* v = std::getenv("SATIN_VERBOSE");
  return v && *v && std::string(v) != "0";
}

/// Tracks files written by a command so a failure can remove them.
class Outputs {
 public:
  std::ofstream open(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    written_.push_back(p);
    std::ofstream os(p);
    if (!os) throw ConfigError(p.string() + ": cannot open for writing");
    return os;
  }
  void discard() {
    std::error_code ec;
    for (const auto& p : written_) fs::remove(p, ec);
  }

 private:
  std::vector<fs::path> written_;
};

struct Common {
  std::string config;
  std::string scheme = "hqcgbd";
  std::optional<std::size_t> slots;
  std::vector<std::uint64_t> seeds{1};
  std::vector<double> vs;
  std::optional<std::size_t> cuts;
  std::optional<double> eps;
  std::optional<std::size_t> lmax;
  std::string out = "out";
};

void add_control_flags(CLI::App* c, Common& o) {
  c->add_option("--config", o.config, "scenario JSON")->required()->check(CLI::ExistingFile);
  c->add_option("--cuts", o.cuts, "cuts per iteration (multi-cut)");
  c->add_option("--eps", o.eps, "relative gap tolerance");
  c->add_option("--lmax", o.lmax, "iteration limit");
}

SolverOptions solver_options(const ExperimentConfig& e, const Common& o) {
  SolverOptions so;
  so.control = e.control;
  so.anneal = e.anneal;
  if (o.cuts) so.control.cuts_per_iteration = *o.cuts;
  if (o.eps) so.control.epsilon = *o.eps;
  if (o.lmax) so.control.max_iterations = *o.lmax;
  if (!o.vs.empty()) so.control.V = o.vs.front();
  so.control.validate();
  return so;
}

void write_summary(Outputs& out, const fs::path& p, const RunSummary& s, const std::string& hash) {
  auto os = out.open(p);
  os << summary_to_json(s, hash).dump(2) << '\n';
}

int cmd_simulate(const Common& o, Outputs& out) {
  auto e = load_experiment(o.config);
  SimulationOptions so;
  so.scheme = parse_scheme(o.scheme);
  so.slots = o.slots;
  so.seed = o.seeds.front();
  so.solver = solver_options(e, o);
  fs::path dir(o.out);
  auto run = out.open(dir / "run.csv");
  auto timing = out.open(dir / "timing.csv");
  write_run_header(run, e.network.ap_count());
  write_timing_header(timing);
  bool talk = verbose();
  auto sum = simulate(e.network, so, [&](const RunRecord& r) {
    write_run_row(run, r);
    write_timing_row(timing, r);
    if (talk) std::cerr << "t=" << r.t << " delay=" << r.total_delay << " it=" << r.iterations << '\n';
  });
  run.close();
  timing.close();
  write_summary(out, dir / "summary.json", sum, config_hash(e));
  std::cout << "slots " << sum.slots << " avg_delay " << fmt_double(sum.avg_delay) << '\n';
  return 0;
}

int cmd_sweep(const Common& o, Outputs& out) {
  auto e = load_experiment(o.config);
  if (o.vs.empty()) throw ConfigError("--v: at least one value required");
  SimulationOptions so;
  so.scheme = parse_scheme(o.scheme);
  so.slots = o.slots;
  so.solver = solver_options(e, o);
  fs::path dir(o.out);
  auto table = out.open(dir / "sweep.csv");
  write_sweep_header(table, e.network.ap_count());
  bool talk = verbose();
  auto rows = sweep_v(e.network, so, o.vs, o.seeds, [&](const SweepRow& r) {
    write_sweep_row(table, r);
    if (talk) std::cerr << "V=" << r.V << " seed=" << r.seed << " delay=" << r.summary.avg_delay << '\n';
  });
  table.close();
  auto pts = trend_points(rows);
  auto trend = out.open(dir / "trend.csv");
  trend << "V,median_delay,median_energy\n";
  for (const auto& p : pts) trend << fmt_double(p.V) << ',' << fmt_double(p.delay) << ',' << fmt_double(p.energy) << '\n';
  auto chk = check_v_trend(pts);
  std::cout << "trend " << (chk.pass ? "PASS" : "FAIL") << " delay_inversions " << chk.delay_inversions
            << " energy_inversions " << chk.energy_inversions << '\n';
  return 0;
}

struct SlotSource {
  std::string slot_file;
  std::size_t t = 0;
};

SlotReplay load_slot(const ExperimentConfig& e, const SlotSource& src, std::uint64_t seed) {
  if (!src.slot_file.empty()) {
    try {
      return slot_from_json(read_json_file(src.slot_file), e.network.ap_count());
    } catch (const ConfigError& err) {
      throw ConfigError(src.slot_file + ": " + err.what());
    }
  }
  SlotReplay r;
  r.slot = sample_slot(e.network, src.t, seed);
  r.queues = QueueState(e.network.ap_count());
  r.queues.t = src.t;
  return r;
}

Json result_json(const ExperimentConfig& e, const SlotReplay& rp, const Assignment& a, const Allocation& x, double phi) {
  auto outcome = service_delay(e.network, rp.slot, a, x);
  return {{"t", rp.slot.t},
          {"phi", phi},
          {"total_delay", outcome.total_delay},
          {"ap_energy", outcome.ap_energy},
          {"assignment", choices_to_json(a)},
          {"beta", detail::grid_to_json(x.beta)},
          {"f", detail::grid_to_json(x.f)}};
}

int cmd_solve_slot(const Common& o, const SlotSource& src, bool dump_master, Outputs& out) {
  auto e = load_experiment(o.config);
  auto rp = load_slot(e, src, o.seeds.front());
  SolverOptions so = solver_options(e, o);
  so.anneal.seed = o.seeds.front();
  Scheme scheme = parse_scheme(o.scheme);
  SolveResult r;
  switch (scheme) {
    case Scheme::Hqcgbd: r = solve_slot_single_cut(e.network, rp.slot, rp.queues, so); break;
    case Scheme::HqcgbdMulti: r = solve_slot_multi_cut(e.network, rp.slot, rp.queues, so); break;
    case Scheme::Gbd: r = solve_slot_classical_gbd(e.network, rp.slot, rp.queues, so); break;
    default: throw ConfigError("scheme: solve-slot supports hqcgbd, hqcgbd-multi, gbd");
  }
  fs::path dir(o.out);
  Json res = result_json(e, rp, r.assignment(), r.allocation(), r.phi());
  res["scheme"] = o.scheme;
  res["termination"] = termination_name(r.trace.reason);
  res["iterations"] = r.trace.iteration_count();
  res["seed"] = o.seeds.front();
  {
    auto os = out.open(dir / "result.json");
    os << res.dump(2) << '\n';
  }
  {
    auto os = out.open(dir / "trace.csv");
    write_trace_csv(os, r.trace);
  }
  {
    auto os = out.open(dir / "slot.json");
    os << slot_to_json(rp.slot, &rp.queues).dump(2) << '\n';
  }
  if (dump_master) {
    auto os = out.open(dir / "master.json");
    os << master_to_json(r.master).dump(2) << '\n';
  }
  std::cout << "phi " << fmt_double(r.phi()) << " iterations " << r.trace.iteration_count() << " "
            << termination_name(r.trace.reason) << '\n';
  return 0;
}

int cmd_oracle(const Common& o, const SlotSource& src, bool table, Outputs& out) {
  auto e = load_experiment(o.config);
  auto rp = load_slot(e, src, o.seeds.front());
  OracleOptions oo;
  oo.V = o.vs.empty() ? e.control.V : o.vs.front();
  oo.keep_table = table;
  auto r = enumerate_optimal(e.network, rp.slot, rp.queues, oo);
  fs::path dir(o.out);
  Json res = result_json(e, rp, r.assignment(), r.allocation(), r.phi);
  res["enumerated"] = r.enumerated;
  res["screened"] = r.screened;
  {
    auto os = out.open(dir / "oracle.json");
    os << res.dump(2) << '\n';
  }
  if (table) {
    auto os = out.open(dir / "oracle_table.csv");
    os << "index,choices,phi\n";
    for (std::size_t i = 0; i < r.table.size(); ++i)
      os << i << ",\"" << choices_to_json(r.table[i].first).dump() << "\"," << fmt_double(r.table[i].second) << '\n';
  }
  std::cout << "phi " << fmt_double(r.phi) << " enumerated " << r.enumerated << '\n';
  return 0;
}

int cmd_export_qubo(const std::string& master_path, const std::string& out_path, Outputs& out) {
  MasterModel mm;
  try {
    mm = master_from_json(read_json_file(master_path));
  } catch (const ConfigError& err) {
    throw ConfigError(master_path + ": " + err.what());
  }
  // Same encoding and penalties the sampled master uses inside the solver.
  SolverOptions so;
  CompileOptions co;
  co.encoding = so.encoding;
  co.penalties = so.penalties;
  QuboModel qm = compile_qubo(mm, co);
  fs::path p(out_path);
  {
    auto os = out.open(p);
    write_qubo(os, qm);
  }
  fs::path reg = p;
  reg.replace_extension(".registry.json");
  {
    auto os = out.open(reg);
    os << registry_to_json(qm).dump(2) << '\n';
  }
  std::cout << "variables " << qm.num_vars << " terms " << qm.terms.size() << '\n';
  return 0;
}

int cmd_anneal(const std::string& qubo_path, const std::string& out_path, AnnealParams p, Outputs& out) {
  std::ifstream in(qubo_path);
  if (!in) throw ConfigError(qubo_path + ": cannot open");
  Qubo q = read_qubo(in);
  auto samples = SimulatedAnnealer().sample(q, p);
  auto os = out.open(out_path);
  write_samples_jsonl(os, samples);
  std::cout << "best " << fmt_double(samples.front().energy) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid Benders solver and simulator for satellite-aerial-terrestrial edge networks"};
  app.require_subcommand(1);
  Common o;
  SlotSource src;
  bool dump_master = false, table = false;
  std::string master_path, qubo_path;
  AnnealParams ap;

  auto* sim = app.add_subcommand("simulate", "run the slot loop for one scheme");
  add_control_flags(sim, o);
  sim->add_option("--scheme", o.scheme, "hqcgbd, hqcgbd-multi, gbd, heuristic, myopic");
  sim->add_option("--slots", o.slots, "slots to simulate (default: config horizon)");
  sim->add_option("--seed", o.seeds, "slot randomness seed")->expected(1);
  sim->add_option("--v", o.vs, "control parameter V")->expected(1);
  sim->add_option("--out", o.out, "output directory");

  auto* sweep = app.add_subcommand("sweep-v", "simulate over V values and seeds");
  add_control_flags(sweep, o);
  sweep->add_option("--scheme", o.scheme);
  sweep->add_option("--slots", o.slots);
  sweep->add_option("--seed", o.seeds, "one or more seeds")->expected(1, 1000);
  sweep->add_option("--v", o.vs, "one or more V values")->required()->expected(1, 1000);
  sweep->add_option("--out", o.out);

  auto* solve = app.add_subcommand("solve-slot", "solve one slot");
  add_control_flags(solve, o);
  solve->add_option("--scheme", o.scheme, "hqcgbd, hqcgbd-multi, gbd");
  solve->add_option("--slot", src.slot_file, "slot JSON to replay")->check(CLI::ExistingFile);
  solve->add_option("--t", src.t, "slot index to sample when no --slot is given");
  solve->add_option("--seed", o.seeds)->expected(1);
  solve->add_option("--v", o.vs)->expected(1);
  solve->add_flag("--dump-master", dump_master, "also write master.json");
  solve->add_option("--out", o.out);

  auto* orc = app.add_subcommand("oracle", "exhaustive optimum of one slot");
  orc->add_option("--config", o.config)->required()->check(CLI::ExistingFile);
  orc->add_option("--slot", src.slot_file)->check(CLI::ExistingFile);
  orc->add_option("--t", src.t);
  orc->add_option("--seed", o.seeds)->expected(1);
  orc->add_option("--v", o.vs)->expected(1);
  orc->add_flag("--table", table, "write every assignment's value");
  orc->add_option("--out", o.out);

  auto* exq = app.add_subcommand("export-qubo", "compile a master dump to the QUBO text format");
  exq->add_option("--master", master_path)->required()->check(CLI::ExistingFile);
  exq->add_option("--out", o.out, "output .qubo path")->required();

  auto* ann = app.add_subcommand("anneal", "sample a QUBO file");
  ann->add_option("--qubo", qubo_path)->required()->check(CLI::ExistingFile);
  ann->add_option("--reads", ap.num_reads);
  ann->add_option("--sweeps", ap.sweeps);
  ann->add_option("--seed", ap.seed);
  ann->add_flag("--auto-beta", ap.auto_beta);
  ann->add_option("--out", o.out, "output .jsonl path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  Outputs out;
  try {
    if (*sim) return cmd_simulate(o, out);
    if (*sweep) return cmd_sweep(o, out);
    if (*solve) return cmd_solve_slot(o, src, dump_master, out);
    if (*orc) return cmd_oracle(o, src, table, out);
    if (*exq) return cmd_export_qubo(master_path, o.out, out);
    if (*ann) return cmd_anneal(qubo_path, o.out, ap, out);
  } catch (const ConfigError& e) {
    out.discard();
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    out.discard();
    std::cerr << "solver failure: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
