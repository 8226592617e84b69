// Serialization: scenario JSON, slot replays, master dumps, the QUBO text
// format, JSON-lines samples and the run/trace CSV writers.
#pragma once

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "satin/annealer.hpp"
#include "satin/hqcgbd.hpp"
#include "satin/lyapunov.hpp"
#include "satin/master.hpp"
#include "satin/scenario.hpp"

namespace satin {

inline constexpr const char* kCodeVersion = "0.1.0";
inline constexpr const char* kRunSchema = "satin-run/1";
inline constexpr const char* kTraceSchema = "satin-trace/1";

using Json = nlohmann::json;

/// Shortest decimal text that reads back to the same double.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace detail {

/// Strict object reader: typed field access with path-qualified errors, and
/// rejection of keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where("") + ": expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const Json& at(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(where(key) + ": missing");
    return j_.at(key);
  }

  void number(const std::string& key, double& out) {
    if (!has(key)) return;
    const Json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
    out = v.get<double>();
  }

  template <typename Int>
  void integer(const std::string& key, Int& out) {
    if (!has(key)) return;
    const Json& v = j_.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && v.get<std::int64_t>() < 0))
      throw ConfigError(where(key) + ": expected a non-negative integer");
    out = static_cast<Int>(v.get<std::uint64_t>());
  }

  void boolean(const std::string& key, bool& out) {
    if (!has(key)) return;
    const Json& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(where(key) + ": expected true or false");
    out = v.get<bool>();
  }

  std::string where(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  /// Throws on the first key that was never requested.
  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError(where(k) + ": unknown key");
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline Position position_from_json(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  Position p;
  r.number("x", p.x);
  r.number("y", p.y);
  r.number("z", p.z);
  r.finish();
  return p;
}

inline Json position_to_json(const Position& p) { return {{"x", p.x}, {"y", p.y}, {"z", p.z}}; }

inline Tier tier_from_string(const std::string& s, const std::string& path) {
  if (s == "bs") return Tier::BaseStation;
  if (s == "hap") return Tier::Hap;
  if (s == "satellite") return Tier::Satellite;
  throw ConfigError(path + ": unknown tier '" + s + "' (bs, hap, satellite)");
}

template <typename T>
Json grid_to_json(const Grid<T>& g) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < g.rows(); ++r) {
    Json row = Json::array();
    for (std::size_t c = 0; c < g.cols(); ++c) row.push_back(g(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <typename T>
Grid<T> grid_from_json(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path + ": expected an array of rows");
  std::size_t rows = j.size(), cols = rows ? j[0].size() : 0;
  Grid<T> g(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw ConfigError(path + "[" + std::to_string(r) + "]: ragged row");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number())
        throw ConfigError(path + "[" + std::to_string(r) + "][" + std::to_string(c) + "]: expected a number");
      g(r, c) = j[r][c].get<T>();
    }
  }
  return g;
}

template <typename T>
std::vector<T> vector_from_json(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path + ": expected an array");
  std::vector<T> v;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(path + "[" + std::to_string(i) + "]: expected a number");
    v.push_back(j[i].get<T>());
  }
  return v;
}

}  // namespace detail

// ---- scenario ---------------------------------------------------------------

inline ApProfile ap_from_json(const Json& j, const std::string& path) {
  detail::ObjectReader r(j, path);
  ApProfile ap;
  const Json& tier = r.at("tier");
  if (!tier.is_string()) throw ConfigError(r.where("tier") + ": expected a string");
  ap.tier = detail::tier_from_string(tier.get<std::string>(), r.where("tier"));
  r.number("bandwidth_hz", ap.bandwidth_hz);
  r.number("tx_power_dbm", ap.tx_power_dbm);
  r.number("max_cpu_hz", ap.max_cpu_hz);
  r.number("switched_capacitance", ap.switched_capacitance);
  r.number("beta_min", ap.beta_min);
  r.number("beta_max", ap.beta_max);
  r.number("f_min_hz", ap.f_min_hz);
  r.number("f_max_hz", ap.f_max_hz);
  r.number("backhaul_bps", ap.backhaul_bps);
  r.number("energy_budget_j", ap.energy_budget_j);
  r.number("antenna_gain_dbi", ap.antenna_gain_dbi);
  r.number("carrier_hz", ap.carrier_hz);
  if (r.has("position")) ap.position = detail::position_from_json(j.at("position"), r.where("position"));
  r.number("orbit_altitude_m", ap.orbit_altitude_m);
  r.number("orbital_velocity_mps", ap.orbital_velocity_mps);
  r.number("visibility_duty_cycle", ap.visibility_duty_cycle);
  r.number("visibility_phase", ap.visibility_phase);
  r.number("blockage_prob", ap.blockage_prob);
  r.number("rician_k_db", ap.rician_k_db);
  r.finish();
  return ap;
}

inline Json ap_to_json(const ApProfile& ap) {
  return {{"tier", tier_name(ap.tier)},
          {"bandwidth_hz", ap.bandwidth_hz},
          {"tx_power_dbm", ap.tx_power_dbm},
          {"max_cpu_hz", ap.max_cpu_hz},
          {"switched_capacitance", ap.switched_capacitance},
          {"beta_min", ap.beta_min},
          {"beta_max", ap.beta_max},
          {"f_min_hz", ap.f_min_hz},
          {"f_max_hz", ap.f_max_hz},
          {"backhaul_bps", ap.backhaul_bps},
          {"energy_budget_j", ap.energy_budget_j},
          {"antenna_gain_dbi", ap.antenna_gain_dbi},
          {"carrier_hz", ap.carrier_hz},
          {"position", detail::position_to_json(ap.position)},
          {"orbit_altitude_m", ap.orbit_altitude_m},
          {"orbital_velocity_mps", ap.orbital_velocity_mps},
          {"visibility_duty_cycle", ap.visibility_duty_cycle},
          {"visibility_phase", ap.visibility_phase},
          {"blockage_prob", ap.blockage_prob},
          {"rician_k_db", ap.rician_k_db}};
}

/// Everything a run needs: the network plus controller and sampler settings.
struct ExperimentConfig {
  NetworkConfig network;
  ControlParams control;
  AnnealParams anneal = solver_anneal_defaults();
};

inline void network_fields(detail::ObjectReader& r, const Json& j, NetworkConfig& c) {
  r.integer("user_count", c.user_count);
  r.number("noise_dbm_per_hz", c.noise_dbm_per_hz);
  r.number("user_tx_power_dbm", c.user_tx_power_dbm);
  r.number("slot_duration_s", c.slot_duration_s);
  r.integer("horizon", c.horizon);
  r.number("cloud_cpu_hz", c.cloud_cpu_hz);
  r.integer("rng_seed", c.rng_seed);
  r.number("area_m", c.area_m);
  r.number("data_bits_min", c.data_bits_min);
  r.number("data_bits_max", c.data_bits_max);
  r.number("cycles_per_bit_min", c.cycles_per_bit_min);
  r.number("cycles_per_bit_max", c.cycles_per_bit_max);
  if (r.has("user_positions")) {
    const Json& up = j.at("user_positions");
    if (!up.is_array()) throw ConfigError(r.where("user_positions") + ": expected an array");
    for (std::size_t i = 0; i < up.size(); ++i)
      c.user_positions.push_back(
          detail::position_from_json(up[i], r.where("user_positions") + "[" + std::to_string(i) + "]"));
  }
  const Json& aps = r.at("aps");
  if (!aps.is_array()) throw ConfigError(r.where("aps") + ": expected an array");
  for (std::size_t m = 0; m < aps.size(); ++m)
    c.aps.push_back(ap_from_json(aps[m], r.where("aps") + "[" + std::to_string(m) + "]"));
}

inline ExperimentConfig experiment_from_json(const Json& j) {
  detail::ObjectReader r(j, "");
  ExperimentConfig e;
  network_fields(r, j, e.network);
  if (r.has("control")) {
    detail::ObjectReader c(j.at("control"), "control");
    c.number("V", e.control.V);
    c.number("epsilon", e.control.epsilon);
    c.integer("max_iterations", e.control.max_iterations);
    c.integer("cuts_per_iteration", e.control.cuts_per_iteration);
    c.finish();
  }
  if (r.has("anneal")) {
    detail::ObjectReader a(j.at("anneal"), "anneal");
    a.integer("num_reads", e.anneal.num_reads);
    a.integer("sweeps", e.anneal.sweeps);
    a.number("beta_start", e.anneal.beta_start);
    a.number("beta_end", e.anneal.beta_end);
    a.boolean("auto_beta", e.anneal.auto_beta);
    a.boolean("greedy_finish", e.anneal.greedy_finish);
    a.finish();
  }
  r.finish();
  e.network.validate();
  try {
    e.control.validate();
  } catch (const ConfigError& err) {
    throw ConfigError(std::string("control.") + err.what());
  }
  e.anneal.validate();
  return e;
}

inline Json experiment_to_json(const ExperimentConfig& e) {
  const auto& c = e.network;
  Json j = {{"user_count", c.user_count},
            {"noise_dbm_per_hz", c.noise_dbm_per_hz},
            {"user_tx_power_dbm", c.user_tx_power_dbm},
            {"slot_duration_s", c.slot_duration_s},
            {"horizon", c.horizon},
            {"cloud_cpu_hz", c.cloud_cpu_hz},
            {"rng_seed", c.rng_seed},
            {"area_m", c.area_m},
            {"data_bits_min", c.data_bits_min},
            {"data_bits_max", c.data_bits_max},
            {"cycles_per_bit_min", c.cycles_per_bit_min},
            {"cycles_per_bit_max", c.cycles_per_bit_max}};
  if (!c.user_positions.empty()) {
    Json up = Json::array();
    for (const auto& p : c.user_positions) up.push_back(detail::position_to_json(p));
    j["user_positions"] = up;
  }
  Json aps = Json::array();
  for (const auto& ap : c.aps) aps.push_back(ap_to_json(ap));
  j["aps"] = aps;
  j["control"] = {{"V", e.control.V},
                  {"epsilon", e.control.epsilon},
                  {"max_iterations", e.control.max_iterations},
                  {"cuts_per_iteration", e.control.cuts_per_iteration}};
  j["anneal"] = {{"num_reads", e.anneal.num_reads},     {"sweeps", e.anneal.sweeps},
                 {"beta_start", e.anneal.beta_start},   {"beta_end", e.anneal.beta_end},
                 {"auto_beta", e.anneal.auto_beta},     {"greedy_finish", e.anneal.greedy_finish}};
  return j;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline ExperimentConfig load_experiment(const std::string& path) {
  try {
    return experiment_from_json(read_json_file(path));
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    if (msg.rfind(path, 0) == 0) throw;
    throw ConfigError(path + ": " + msg);
  }
}

/// Hash of the canonical (sorted-key, defaults-filled) configuration.
inline std::string config_hash(const ExperimentConfig& e) { return hex64(fnv1a(experiment_to_json(e).dump())); }

// ---- slots and queues -------------------------------------------------------

inline Json slot_to_json(const SlotState& s, const QueueState* q = nullptr) {
  Json j = {{"t", s.t},
            {"available", detail::grid_to_json(s.available)},
            {"gain", detail::grid_to_json(s.gain)},
            {"data_bits", s.data_bits},
            {"cycles_per_bit", s.cycles_per_bit}};
  if (q) j["queues"] = q->backlog;
  return j;
}

struct SlotReplay {
  SlotState slot;
  QueueState queues;
};

inline SlotReplay slot_from_json(const Json& j, std::size_t aps) {
  detail::ObjectReader r(j, "slot");
  SlotReplay out;
  r.integer("t", out.slot.t);
  out.slot.available = detail::grid_from_json<std::uint8_t>(r.at("available"), "slot.available");
  out.slot.gain = detail::grid_from_json<double>(r.at("gain"), "slot.gain");
  out.slot.data_bits = detail::vector_from_json<double>(r.at("data_bits"), "slot.data_bits");
  out.slot.cycles_per_bit = detail::vector_from_json<double>(r.at("cycles_per_bit"), "slot.cycles_per_bit");
  const std::size_t U = out.slot.available.rows();
  if (out.slot.available.cols() != aps) throw ConfigError("slot.available: column count must equal the AP count");
  if (out.slot.gain.rows() != U || out.slot.gain.cols() != aps) throw ConfigError("slot.gain: shape mismatch");
  if (out.slot.data_bits.size() != U || out.slot.cycles_per_bit.size() != U)
    throw ConfigError("slot.data_bits/cycles_per_bit: length must equal the user count");
  out.queues = QueueState(aps);
  out.queues.t = out.slot.t;
  if (r.has("queues")) {
    out.queues.backlog = detail::vector_from_json<double>(j.at("queues"), "slot.queues");
    if (out.queues.size() != aps) throw ConfigError("slot.queues: length must equal the AP count");
    for (double v : out.queues.backlog)
      if (!(v >= 0) || !std::isfinite(v)) throw ConfigError("slot.queues: entries must be finite and >= 0");
  }
  r.finish();
  return out;
}

// ---- master dumps -----------------------------------------------------------

inline Json choices_to_json(const Assignment& a) {
  Json out = Json::array();
  for (const auto& c : a.choices()) out.push_back({{"ap", c.ap}, {"local", c.local}});
  return out;
}

inline Assignment choices_from_json(const Json& j, std::size_t aps, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path + ": expected an array");
  std::vector<Choice> c;
  for (std::size_t u = 0; u < j.size(); ++u) {
    detail::ObjectReader r(j[u], path + "[" + std::to_string(u) + "]");
    const Json& ap = r.at("ap");
    const Json& local = r.at("local");
    if (!ap.is_number_integer() || ap.get<int>() < -1 || ap.get<int>() >= static_cast<int>(aps))
      throw ConfigError(r.where("ap") + ": AP index out of range");
    if (!local.is_boolean()) throw ConfigError(r.where("local") + ": expected true or false");
    r.finish();
    c.push_back({ap.get<int>(), local.get<bool>()});
  }
  return Assignment::from_choices(c, aps);
}

inline Json master_to_json(const MasterModel& mm) {
  Json cuts = Json::array();
  for (const auto& c : mm.cuts)
    cuts.push_back({{"constant", c.constant},
                    {"a", detail::grid_to_json(c.a)},
                    {"b", detail::grid_to_json(c.b)},
                    {"q", detail::grid_to_json(c.q)},
                    {"origin", choices_to_json(c.origin)},
                    {"origin_value", c.origin_value}});
  return {{"users", mm.users},
          {"aps", mm.aps},
          {"available", detail::grid_to_json(mm.available)},
          {"computes", mm.computes},
          {"max_associated", mm.max_associated},
          {"max_onboard", mm.max_onboard},
          {"energy_screen", mm.energy_screen},
          {"relay_energy", detail::grid_to_json(mm.relay_energy)},
          {"onboard_min_energy", detail::grid_to_json(mm.onboard_min_energy)},
          {"energy_budget", mm.energy_budget},
          {"cuts", cuts}};
}

inline MasterModel master_from_json(const Json& j) {
  detail::ObjectReader r(j, "master");
  MasterModel mm;
  r.integer("users", mm.users);
  r.integer("aps", mm.aps);
  mm.available = detail::grid_from_json<std::uint8_t>(r.at("available"), "master.available");
  mm.computes = detail::vector_from_json<std::uint8_t>(r.at("computes"), "master.computes");
  mm.max_associated = detail::vector_from_json<std::size_t>(r.at("max_associated"), "master.max_associated");
  mm.max_onboard = detail::vector_from_json<std::size_t>(r.at("max_onboard"), "master.max_onboard");
  r.boolean("energy_screen", mm.energy_screen);
  mm.relay_energy = detail::grid_from_json<double>(r.at("relay_energy"), "master.relay_energy");
  mm.onboard_min_energy = detail::grid_from_json<double>(r.at("onboard_min_energy"), "master.onboard_min_energy");
  mm.energy_budget = detail::vector_from_json<double>(r.at("energy_budget"), "master.energy_budget");
  if (mm.available.rows() != mm.users || mm.available.cols() != mm.aps || mm.computes.size() != mm.aps ||
      mm.max_associated.size() != mm.aps || mm.max_onboard.size() != mm.aps || mm.energy_budget.size() != mm.aps)
    throw ConfigError("master: inconsistent shapes");
  const Json& cuts = r.at("cuts");
  if (!cuts.is_array()) throw ConfigError("master.cuts: expected an array");
  for (std::size_t k = 0; k < cuts.size(); ++k) {
    std::string path = "master.cuts[" + std::to_string(k) + "]";
    detail::ObjectReader c(cuts[k], path);
    BendersCut cut;
    c.number("constant", cut.constant);
    cut.a = detail::grid_from_json<double>(c.at("a"), path + ".a");
    cut.b = detail::grid_from_json<double>(c.at("b"), path + ".b");
    cut.q = detail::grid_from_json<double>(c.at("q"), path + ".q");
    cut.origin = choices_from_json(c.at("origin"), mm.aps, path + ".origin");
    c.number("origin_value", cut.origin_value);
    c.finish();
    for (const Grid<double>* g : {&cut.a, &cut.b, &cut.q})
      if (g->rows() != mm.users || g->cols() != mm.aps) throw ConfigError(path + ": coefficient shape mismatch");
    mm.cuts.push_back(std::move(cut));
  }
  r.finish();
  return mm;
}

// ---- QUBO text format -------------------------------------------------------

/// `p qubo <num_vars> <num_terms> <offset>` then `i j coeff` with i <= j in
/// lexicographic order.
inline void write_qubo(std::ostream& os, const Qubo& q) {
  os << "p qubo " << q.num_vars << ' ' << q.terms.size() << ' ' << fmt_double(q.offset) << '\n';
  for (const auto& [ij, c] : q.terms) os << ij.first << ' ' << ij.second << ' ' << fmt_double(c) << '\n';
}

inline Qubo read_qubo(std::istream& is) {
  std::string line;
  auto fail = [](const std::string& why) { throw ConfigError("qubo: " + why); };
  while (std::getline(is, line) && (line.empty() || line[0] == '#' || line[0] == 'c')) {}
  std::istringstream hdr(line);
  std::string p, kind;
  std::size_t n = 0, terms = 0;
  std::string off;
  if (!(hdr >> p >> kind >> n >> terms >> off) || p != "p" || kind != "qubo") fail("bad header line '" + line + "'");
  Qubo q;
  q.num_vars = n;
  q.offset = std::stod(off);
  for (std::size_t k = 0; k < terms; ++k) {
    if (!std::getline(is, line)) fail("expected " + std::to_string(terms) + " terms, got " + std::to_string(k));
    std::istringstream ls(line);
    std::size_t i = 0, j = 0;
    std::string cs;
    if (!(ls >> i >> j >> cs)) fail("bad term line '" + line + "'");
    if (i > j || j >= n) fail("term index out of range in '" + line + "'");
    q.terms[{i, j}] = std::stod(cs);
  }
  return q;
}

inline Json registry_to_json(const QuboModel& qm) {
  static const char* kinds[] = {"alpha", "z", "w", "slack"};
  Json vars = Json::array();
  for (std::size_t i = 0; i < qm.registry.size(); ++i) {
    const auto& v = qm.registry[i];
    vars.push_back({{"index", i}, {"name", v.name}, {"kind", kinds[static_cast<int>(v.kind)]}, {"a", v.a}, {"b", v.b}});
  }
  Json zeta = Json::object();
  for (Family f : {Family::Availability, Family::SingleAssociation, Family::SatelliteRelay, Family::OffloadConsistency,
                   Family::Cut})
    zeta[family_name(f)] = qm.zeta[f];
  return {{"variables", vars},
          {"mu_shift", qm.mu_shift},
          {"mu_scale", qm.mu_scale},
          {"encoding",
           {{"integer_bits", qm.encoding.integer_bits},
            {"fraction_bits", qm.encoding.fraction_bits},
            {"negative_bits", qm.encoding.negative_bits}}},
          {"penalties", zeta},
          {"dropped_cuts", qm.dropped_cuts}};
}

// ---- samples ----------------------------------------------------------------

inline void write_samples_jsonl(std::ostream& os, const std::vector<Sample>& samples) {
  for (const auto& s : samples) {
    std::string bits(s.bits.size(), '0');
    for (std::size_t i = 0; i < s.bits.size(); ++i) bits[i] = s.bits[i] ? '1' : '0';
    os << Json{{"bits", bits}, {"energy", s.energy}, {"read", s.read}}.dump() << '\n';
  }
}

inline std::vector<Sample> read_samples_jsonl(std::istream& is) {
  std::vector<Sample> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    Json j = Json::parse(line);
    Sample s;
    for (char c : j.at("bits").get<std::string>()) s.bits.push_back(c == '1');
    s.energy = j.at("energy").get<double>();
    s.read = j.at("read").get<std::size_t>();
    out.push_back(std::move(s));
  }
  return out;
}

// ---- CSV --------------------------------------------------------------------

inline void write_trace_csv(std::ostream& os, const SolveTrace& tr) {
  os << "# schema: " << kTraceSchema << '\n';
  os << "iteration,ub,lb,gap,cuts_added,cuts_total,master_ms,sub_ms\n";
  for (const auto& r : tr.iterations)
    os << r.l << ',' << fmt_double(r.ub) << ',' << fmt_double(r.lb) << ',' << fmt_double(r.gap) << ','
       << r.cuts_added << ',' << r.cuts_total << ',' << fmt_double(r.master_ms) << ',' << fmt_double(r.sub_ms)
       << '\n';
}

}  // namespace satin
