#include "edgecache/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace edgecache {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Shortest decimal form that parses back to the same double.
std::string fmt(double x) {
  char buf[32];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void reject_unknown_keys(const json& j, const std::string& where,
                         const std::set<std::string>& known) {
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) {
      throw std::invalid_argument("config: unknown key \"" + item.key() +
                                  "\" in " + where);
    }
  }
}

double get_num(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) {
    throw std::invalid_argument(std::string("config: ") + key +
                                " must be a number");
  }
  return j[key].get<double>();
}

long get_int(const json& j, const char* key, long fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer()) {
    throw std::invalid_argument(std::string("config: ") + key +
                                " must be an integer");
  }
  return j[key].get<long>();
}

std::string get_str(const json& j, const char* key,
                    const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_string()) {
    throw std::invalid_argument(std::string("config: ") + key +
                                " must be a string");
  }
  return j[key].get<std::string>();
}

std::string resolve(const std::string& base_dir, const std::string& path) {
  if (path.empty()) return path;
  fs::path p(path);
  if (p.is_absolute()) return p.lexically_normal().string();
  return (fs::path(base_dir) / p).lexically_normal().string();
}

std::vector<double> pmf_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) {
    throw std::invalid_argument(std::string("demand file: ") + what +
                                " must be a nonempty array");
  }
  std::vector<double> out;
  out.reserve(j.size());
  double sum = 0.0;
  for (const auto& v : j) {
    if (!v.is_number()) {
      throw std::invalid_argument(std::string("demand file: ") + what +
                                  " entries must be numbers");
    }
    double x = v.get<double>();
    if (x < 0.0) {
      throw std::invalid_argument(std::string("demand file: ") + what +
                                  " entries must be nonnegative");
    }
    out.push_back(x);
    sum += x;
  }
  if (std::fabs(sum - 1.0) > 1e-6) {
    throw std::invalid_argument(std::string("demand file: ") + what +
                                " must sum to 1");
  }
  return out;
}

Matrix rows_from_json(const json& j, const char* what, std::size_t n_rows) {
  if (!j.is_array() || j.size() != n_rows) {
    throw std::invalid_argument(std::string("demand file: ") + what +
                                " must have one row per user");
  }
  Matrix out;
  out.reserve(n_rows);
  std::size_t width = 0;
  for (const auto& row : j) {
    out.push_back(pmf_from_json(row, what));
    if (width == 0) width = out.back().size();
    if (out.back().size() != width) {
      throw std::invalid_argument(std::string("demand file: ") + what +
                                  " rows must have equal length");
    }
  }
  return out;
}

}  // namespace

double ExperimentConfig::gamma0() const {
  return std::pow(10.0, gamma0_db / 10.0);
}

ExperimentConfig parse_config(const std::string& json_text,
                              const std::string& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: bad JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: not an object");
  reject_unknown_keys(j, "top level",
                      {"name", "layout", "radio", "metric", "table", "demand",
                       "problem", "solver", "simulation", "seed", "out_dir"});

  ExperimentConfig c;
  c.name = get_str(j, "name", c.name);
  c.seed = static_cast<std::uint64_t>(get_int(j, "seed", 1));
  c.out_dir = get_str(j, "out_dir", c.out_dir);

  if (j.contains("layout")) {
    const json& l = j["layout"];
    reject_unknown_keys(
        l, "layout",
        {"kind", "n_bs", "cell_radius_m", "K", "frequency", "sites"});
    c.layout = get_str(l, "kind", c.layout);
    c.n_bs = static_cast<int>(get_int(l, "n_bs", c.n_bs));
    c.cell_radius_m = get_num(l, "cell_radius_m", c.cell_radius_m);
    c.K = static_cast<int>(get_int(l, "K", c.K));
    c.frequency = get_str(l, "frequency", c.frequency);
    if (l.contains("sites")) {
      for (const auto& s : l["sites"]) {
        if (!s.is_array() || s.size() != 2) {
          throw std::invalid_argument("config: sites entries must be [x, y]");
        }
        c.sites.push_back({s[0].get<double>(), s[1].get<double>()});
      }
    }
  }
  if (c.layout != "hexagonal" && c.layout != "explicit") {
    throw std::invalid_argument("config: layout.kind must be hexagonal or "
                                "explicit");
  }
  if (c.layout == "explicit") {
    if (c.sites.empty()) {
      throw std::invalid_argument("config: explicit layout needs sites");
    }
    c.n_bs = static_cast<int>(c.sites.size());
  }
  if (c.n_bs < 1) throw std::invalid_argument("config: n_bs must be >= 1");
  if (!(c.cell_radius_m > 0.0)) {
    throw std::invalid_argument("config: cell_radius_m must be positive");
  }
  if (c.K < 1 || c.K > c.n_bs) {
    throw std::invalid_argument("config: K must be in [1, n_bs]");
  }
  if (c.frequency != "colored" && c.frequency != "orthogonal") {
    throw std::invalid_argument("config: frequency must be colored or "
                                "orthogonal");
  }

  if (j.contains("radio")) {
    const json& r = j["radio"];
    reject_unknown_keys(r, "radio",
                        {"tx_power_dbm", "noise_psd_dbm_hz", "bandwidth_hz",
                         "backhaul_rate_bps", "pathloss_const_db",
                         "pathloss_slope_db"});
    c.radio.tx_power_dbm = get_num(r, "tx_power_dbm", c.radio.tx_power_dbm);
    c.radio.noise_psd_dbm_hz =
        get_num(r, "noise_psd_dbm_hz", c.radio.noise_psd_dbm_hz);
    c.radio.bandwidth_hz = get_num(r, "bandwidth_hz", c.radio.bandwidth_hz);
    c.radio.backhaul_rate_bps =
        get_num(r, "backhaul_rate_bps", c.radio.backhaul_rate_bps);
    c.radio.pathloss_const_db =
        get_num(r, "pathloss_const_db", c.radio.pathloss_const_db);
    c.radio.pathloss_slope_db =
        get_num(r, "pathloss_slope_db", c.radio.pathloss_slope_db);
  }
  if (!(c.radio.bandwidth_hz > 0.0)) {
    throw std::invalid_argument("config: bandwidth_hz must be positive");
  }
  if (c.radio.backhaul_rate_bps < 0.0) {
    throw std::invalid_argument("config: backhaul_rate_bps must be >= 0");
  }
  if (!(c.radio.pathloss_slope_db > 20.0)) {
    throw std::invalid_argument(
        "config: pathloss_slope_db must exceed 20 (alpha > 2)");
  }

  if (j.contains("metric")) {
    const json& m = j["metric"];
    reject_unknown_keys(m, "metric", {"kind", "gamma0_db"});
    c.metric = get_str(m, "kind", c.metric);
    c.gamma0_db = get_num(m, "gamma0_db", c.gamma0_db);
  }
  if (c.metric != "rate" && c.metric != "success") {
    throw std::invalid_argument("config: metric.kind must be rate or success");
  }

  if (j.contains("table")) {
    const json& t = j["table"];
    reject_unknown_keys(t, "table", {"per_rank", "backhaul"});
    c.fixed_table.enabled = true;
    if (!t.contains("per_rank") || !t["per_rank"].is_array()) {
      throw std::invalid_argument("config: table.per_rank must be an array");
    }
    for (const auto& v : t["per_rank"]) {
      c.fixed_table.per_rank.push_back(v.get<double>());
    }
    c.fixed_table.backhaul = get_num(t, "backhaul", 0.0);
    if (static_cast<int>(c.fixed_table.per_rank.size()) != c.K) {
      throw std::invalid_argument("config: table.per_rank needs K entries");
    }
  }

  if (j.contains("demand")) {
    const json& d = j["demand"];
    reject_unknown_keys(d, "demand",
                        {"source", "n_users", "n_files", "beta_p", "delta_p",
                         "beta_v", "delta_v", "delta_a", "theta",
                         "target_similarity", "seed", "file", "log",
                         "top_users", "top_files"});
    std::string source = get_str(d, "source", "synthesize");
    if (source == "synthesize") {
      c.source = DemandSourceKind::synthesize;
    } else if (source == "file") {
      c.source = DemandSourceKind::file;
    } else if (source == "log") {
      c.source = DemandSourceKind::log;
    } else {
      throw std::invalid_argument(
          "config: demand.source must be synthesize, file or log");
    }
    c.synth.n_users = static_cast<int>(get_int(d, "n_users", c.synth.n_users));
    c.synth.n_files = static_cast<int>(get_int(d, "n_files", c.synth.n_files));
    c.synth.beta_p = get_num(d, "beta_p", c.synth.beta_p);
    c.synth.delta_p = get_num(d, "delta_p", c.synth.delta_p);
    c.synth.beta_v = get_num(d, "beta_v", c.synth.beta_v);
    c.synth.delta_v = get_num(d, "delta_v", c.synth.delta_v);
    c.synth.delta_a = get_num(d, "delta_a", c.synth.delta_a);
    c.synth.theta = get_num(d, "theta", c.synth.theta);
    c.synth.target_similarity =
        get_num(d, "target_similarity", c.synth.target_similarity);
    c.synth.seed = static_cast<std::uint64_t>(get_int(d, "seed", 1));
    c.demand_file = resolve(base_dir, get_str(d, "file", ""));
    c.log_file = resolve(base_dir, get_str(d, "log", ""));
    c.log_top_users = static_cast<int>(get_int(d, "top_users", 0));
    c.log_top_files = static_cast<int>(get_int(d, "top_files", 0));
  }
  if (c.source == DemandSourceKind::synthesize) {
    if (c.synth.n_users < 1 || c.synth.n_files < 1) {
      throw std::invalid_argument("config: n_users and n_files must be >= 1");
    }
    if (c.synth.beta_p < 0.0 || c.synth.beta_v < 0.0 ||
        c.synth.delta_p < 0.0 || c.synth.delta_v < 0.0 ||
        c.synth.delta_a < 0.0) {
      throw std::invalid_argument("config: demand exponents must be >= 0");
    }
    if (c.synth.target_similarity < 0.0 &&
        (c.synth.theta < 0.0 || c.synth.theta > 1.0)) {
      throw std::invalid_argument("config: theta must be in [0, 1]");
    }
    if (c.synth.target_similarity > 1.0) {
      throw std::invalid_argument(
          "config: target_similarity must be in [0, 1]");
    }
  } else if (c.source == DemandSourceKind::file) {
    if (c.demand_file.empty() || !fs::exists(c.demand_file)) {
      throw std::invalid_argument("config: demand.file does not exist: " +
                                  c.demand_file);
    }
  } else {
    if (c.log_file.empty() || !fs::exists(c.log_file)) {
      throw std::invalid_argument("config: demand.log does not exist: " +
                                  c.log_file);
    }
    if (c.log_top_users < 0 || c.log_top_files < 0) {
      throw std::invalid_argument("config: top_users/top_files must be >= 0");
    }
  }

  if (j.contains("problem")) {
    const json& p = j["problem"];
    reject_unknown_keys(p, "problem", {"n_cache", "eta"});
    c.n_cache = static_cast<int>(get_int(p, "n_cache", c.n_cache));
    c.eta = get_num(p, "eta", c.eta);
  }
  if (c.n_cache < 0) throw std::invalid_argument("config: n_cache must be >= 0");
  if (c.eta < 0.0 || c.eta > 1.0) {
    throw std::invalid_argument("config: eta must be in [0, 1]");
  }

  if (j.contains("solver")) {
    const json& s = j["solver"];
    reject_unknown_keys(s, "solver", {"tol", "max_iter"});
    c.solver.tol = get_num(s, "tol", c.solver.tol);
    c.solver.max_iter = static_cast<int>(get_int(s, "max_iter", c.solver.max_iter));
  }
  if (!(c.solver.tol > 0.0) || c.solver.max_iter < 1) {
    throw std::invalid_argument("config: solver settings out of range");
  }

  if (j.contains("simulation")) {
    const json& s = j["simulation"];
    reject_unknown_keys(s, "simulation", {"requests", "epochs", "threads"});
    c.sim_requests = get_int(s, "requests", c.sim_requests);
    c.sim_epochs = static_cast<int>(get_int(s, "epochs", c.sim_epochs));
    c.sim_threads = static_cast<int>(get_int(s, "threads", c.sim_threads));
  }
  if (c.sim_requests < 1 || c.sim_epochs < 1 || c.sim_threads < 1) {
    throw std::invalid_argument("config: simulation settings out of range");
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  return parse_config(read_file(path), fs::path(path).parent_path().string());
}

std::string canonical_config(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["seed"] = c.seed;
  j["out_dir"] = c.out_dir;
  j["layout"] = {{"kind", c.layout},
                 {"n_bs", c.n_bs},
                 {"cell_radius_m", c.cell_radius_m},
                 {"K", c.K},
                 {"frequency", c.frequency}};
  if (!c.sites.empty()) {
    json sites = json::array();
    for (const auto& s : c.sites) sites.push_back({s[0], s[1]});
    j["layout"]["sites"] = sites;
  }
  j["radio"] = {{"tx_power_dbm", c.radio.tx_power_dbm},
                {"noise_psd_dbm_hz", c.radio.noise_psd_dbm_hz},
                {"bandwidth_hz", c.radio.bandwidth_hz},
                {"backhaul_rate_bps", c.radio.backhaul_rate_bps},
                {"pathloss_const_db", c.radio.pathloss_const_db},
                {"pathloss_slope_db", c.radio.pathloss_slope_db}};
  j["metric"] = {{"kind", c.metric}, {"gamma0_db", c.gamma0_db}};
  if (c.fixed_table.enabled) {
    j["table"] = {{"per_rank", c.fixed_table.per_rank},
                  {"backhaul", c.fixed_table.backhaul}};
  }
  switch (c.source) {
    case DemandSourceKind::synthesize:
      j["demand"] = {{"source", "synthesize"},
                     {"n_users", c.synth.n_users},
                     {"n_files", c.synth.n_files},
                     {"beta_p", c.synth.beta_p},
                     {"delta_p", c.synth.delta_p},
                     {"beta_v", c.synth.beta_v},
                     {"delta_v", c.synth.delta_v},
                     {"delta_a", c.synth.delta_a},
                     {"theta", c.synth.theta},
                     {"target_similarity", c.synth.target_similarity},
                     {"seed", c.synth.seed}};
      break;
    case DemandSourceKind::file:
      j["demand"] = {{"source", "file"}, {"file", c.demand_file}};
      break;
    case DemandSourceKind::log:
      j["demand"] = {{"source", "log"},
                     {"log", c.log_file},
                     {"top_users", c.log_top_users},
                     {"top_files", c.log_top_files}};
      break;
  }
  j["problem"] = {{"n_cache", c.n_cache}, {"eta", c.eta}};
  j["solver"] = {{"tol", c.solver.tol}, {"max_iter", c.solver.max_iter}};
  j["simulation"] = {{"requests", c.sim_requests},
                     {"epochs", c.sim_epochs},
                     {"threads", c.sim_threads}};
  return j.dump();
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string config_hash(const ExperimentConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(
                    fnv1a64(canonical_config(config))));
  return buf;
}

void atomic_write(const std::string& path, const std::string& content) {
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string demand_to_json(const DemandModel& demand) {
  json j;
  j["p"] = demand.p;
  j["v"] = demand.v;
  j["A"] = demand.A;
  j["Q"] = demand.Q;
  return j.dump(2) + "\n";
}

DemandModel demand_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("demand file: bad JSON: ") +
                                e.what());
  }
  for (const char* key : {"p", "v", "A", "Q"}) {
    if (!j.contains(key)) {
      throw std::invalid_argument(std::string("demand file: missing ") + key);
    }
  }
  DemandModel d;
  d.p = pmf_from_json(j["p"], "p");
  d.v = pmf_from_json(j["v"], "v");
  d.A = rows_from_json(j["A"], "A", d.v.size());
  d.Q = rows_from_json(j["Q"], "Q", d.v.size());
  for (const auto& row : d.Q) {
    if (row.size() != d.p.size()) {
      throw std::invalid_argument("demand file: Q rows must match p");
    }
  }
  for (std::size_t f = 0; f < d.p.size(); ++f) {
    double mix = 0.0;
    for (std::size_t u = 0; u < d.v.size(); ++u) mix += d.v[u] * d.Q[u][f];
    if (std::fabs(mix - d.p[f]) > 1e-6) {
      throw std::invalid_argument(
          "demand file: p must equal the activity-weighted mixture of Q");
    }
  }
  return d;
}

void save_demand(const std::string& path, const DemandModel& demand) {
  atomic_write(path, demand_to_json(demand));
}

DemandModel load_demand(const std::string& path) {
  return demand_from_json(read_file(path));
}

void save_policy_csv(const std::string& path, const CachingPolicy& policy,
                     const std::string& hash) {
  std::ostringstream out;
  out << "# n_cache=" << policy.n_cache << " config=" << hash << "\n";
  out << "file";
  for (int b = 0; b < policy.n_bs(); ++b) out << ",b" << b;
  out << "\n";
  for (int f = 0; f < policy.n_files(); ++f) {
    out << f;
    for (int b = 0; b < policy.n_bs(); ++b) out << "," << fmt(policy.c[f][b]);
    out << "\n";
  }
  atomic_write(path, out.str());
}

CachingPolicy load_policy_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line.rfind("# n_cache=", 0) != 0) {
    throw std::invalid_argument("policy file: missing header: " + path);
  }
  CachingPolicy policy;
  policy.n_cache = std::stoi(line.substr(10));
  std::getline(in, line);  // column header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream fields(line);
    std::string field;
    bool first = true;
    while (std::getline(fields, field, ',')) {
      if (first) {
        first = false;
        continue;
      }
      row.push_back(std::stod(field));
    }
    if (!policy.c.empty() && row.size() != policy.c[0].size()) {
      throw std::invalid_argument("policy file: ragged rows: " + path);
    }
    policy.c.push_back(std::move(row));
  }
  if (policy.c.empty()) {
    throw std::invalid_argument("policy file: no rows: " + path);
  }
  return policy;
}

void save_trace_csv(const std::string& path, const SolverTrace& trace) {
  std::ostringstream out;
  out << "iteration,objective,step_norm,max_violation\n";
  for (std::size_t i = 0; i < trace.rows.size(); ++i) {
    const TraceRow& r = trace.rows[i];
    out << (i + 1) << "," << fmt(r.objective) << "," << fmt(r.step_norm) << ","
        << fmt(r.max_violation) << "\n";
  }
  atomic_write(path, out.str());
}

void save_simulation_csv(const std::string& path, const SimResult& result) {
  std::ostringstream out;
  out << "user,requests,defined,success,success_se,rate_bps,rate_se\n";
  for (std::size_t u = 0; u < result.users.size(); ++u) {
    const UserStats& s = result.users[u];
    out << u << "," << s.requests << "," << (s.defined ? 1 : 0) << ","
        << fmt(s.success) << "," << fmt(s.success_se) << "," << fmt(s.rate_bps)
        << "," << fmt(s.rate_se) << "\n";
  }
  atomic_write(path, out.str());
}

void save_sweep_csv(const std::string& path, const std::string& axis,
                    const std::vector<SweepCell>& cells) {
  std::ostringstream out;
  out << "axis,value,policy,seed,network,min,status,error\n";
  for (const SweepCell& c : cells) {
    std::string err = c.error;
    for (char& ch : err) {
      if (ch == ',' || ch == '\n') ch = ';';
    }
    out << axis << "," << fmt(c.axis_value) << "," << c.policy << "," << c.seed
        << "," << fmt(c.network) << "," << fmt(c.min_value) << ","
        << (c.failed ? "failed" : "ok") << "," << err << "\n";
  }
  atomic_write(path, out.str());
}

void save_manifest(const std::string& path, const ExperimentConfig& config,
                   const std::vector<std::string>& artifacts) {
  json j;
  j["version"] = kVersion;
  j["config_format"] = kConfigFormat;
  j["config_hash"] = config_hash(config);
  j["config"] = json::parse(canonical_config(config));
  j["artifacts"] = artifacts;
  atomic_write(path, j.dump(2) + "\n");
}

std::string table_cache_dir() {
  const char* dir = std::getenv("EDGECACHE_CACHE_DIR");
  return dir ? dir : "";
}

std::string table_to_json(const UtilityTable& table) {
  json j;
  j["metric"] = table.metric == Metric::rate ? "rate" : "success";
  j["gamma0"] = table.gamma0;
  j["K"] = table.K;
  j["n_groups"] = table.n_groups;
  j["user_group"] = table.user_group;
  j["region_offset"] = table.region_offset;
  j["values"] = table.values;
  j["errors"] = table.errors;
  j["quadrature_converged"] = table.quadrature_converged;
  return j.dump() + "\n";
}

UtilityTable table_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("table file: bad JSON: ") +
                                e.what());
  }
  UtilityTable t;
  try {
    std::string metric = j.at("metric").get<std::string>();
    if (metric == "rate") {
      t.metric = Metric::rate;
    } else if (metric == "success") {
      t.metric = Metric::success;
    } else {
      throw std::invalid_argument("table file: bad metric " + metric);
    }
    t.gamma0 = j.at("gamma0").get<double>();
    t.K = j.at("K").get<int>();
    t.n_groups = j.at("n_groups").get<int>();
    t.user_group = j.at("user_group").get<std::vector<int>>();
    t.region_offset = j.at("region_offset").get<std::vector<int>>();
    t.values = j.at("values").get<std::vector<double>>();
    t.errors = j.at("errors").get<std::vector<double>>();
    t.quadrature_converged = j.at("quadrature_converged").get<bool>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("table file: ") + e.what());
  }
  return t;
}

std::optional<UtilityTable> load_cached_table(const std::string& key) {
  std::string dir = table_cache_dir();
  if (dir.empty()) return std::nullopt;
  fs::path path = fs::path(dir) / (key + ".json");
  if (!fs::exists(path)) return std::nullopt;
  return table_from_json(read_file(path.string()));
}

void store_cached_table(const std::string& key, const UtilityTable& table) {
  std::string dir = table_cache_dir();
  if (dir.empty()) return;
  atomic_write((fs::path(dir) / (key + ".json")).string(),
               table_to_json(table));
}

}  // namespace edgecache
