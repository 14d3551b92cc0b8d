#include "edgecache/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

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

std::string out_path(const ExperimentConfig& config, const std::string& name) {
  return (fs::path(config.out_dir) / name).string();
}

// Geometry/radio/metric slice of the config; demand and solver settings do
// not affect the tables.
std::string table_key(const ExperimentConfig& c) {
  json j;
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
  char buf[24];
  std::snprintf(buf, sizeof(buf), "tbl-%016llx",
                static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

UtilityTable table_from_config(const ExperimentConfig& config,
                               const NetworkLayout& layout,
                               const SubregionTable& subregions,
                               const FrequencyPlan& plan) {
  if (config.fixed_table.enabled) {
    return make_uniform_table(subregions, config.fixed_table.per_rank,
                              config.fixed_table.backhaul);
  }
  Metric metric = config.metric == "rate" ? Metric::rate : Metric::success;
  std::string key = table_key(config);
  if (auto cached = load_cached_table(key)) {
    if (cached->metric == metric && cached->K == config.K) return *cached;
  }
  UtilityTable table = compute_utility_tables(layout, subregions, plan,
                                              config.radio, metric,
                                              config.gamma0());
  store_cached_table(key, table);
  return table;
}

double min_defined(const SimResult& result, bool rate) {
  double best = std::numeric_limits<double>::infinity();
  for (const UserStats& s : result.users) {
    if (!s.defined) continue;
    best = std::min(best, rate ? s.rate_bps : s.success);
  }
  if (!std::isfinite(best)) {
    throw std::runtime_error("simulation produced no defined users");
  }
  return best;
}

}  // namespace

NetworkLayout layout_from_config(const ExperimentConfig& config) {
  if (config.layout == "hexagonal") {
    return build_layout_hexagonal(config.n_bs, config.cell_radius_m);
  }
  return build_layout_explicit(config.sites, config.cell_radius_m);
}

DemandModel demand_from_config(const ExperimentConfig& config) {
  const SynthesisSpec& s = config.synth;
  switch (config.source) {
    case DemandSourceKind::synthesize: {
      DemandModel d;
      d.p = mzipf_pmf(s.n_files, s.beta_p, s.delta_p);
      d.v = mzipf_pmf(s.n_users, s.beta_v, s.delta_v);
      double theta = s.theta;
      if (s.target_similarity >= 0.0) {
        theta = calibrate_theta(d.p, d.v, s.target_similarity, 5, s.seed);
      }
      d.Q = synthesize_preferences(d.p, d.v, theta, s.seed);
      d.A = synthesize_locations(s.n_users, config.n_bs, s.delta_a, s.seed + 1);
      return d;
    }
    case DemandSourceKind::file:
      return load_demand(config.demand_file);
    case DemandSourceKind::log: {
      std::ifstream in(config.log_file);
      if (!in) {
        throw std::invalid_argument("cannot open log " + config.log_file);
      }
      RequestLog log = parse_request_log(in);
      int top_users = config.log_top_users > 0
                          ? config.log_top_users
                          : std::numeric_limits<int>::max();
      int top_files = config.log_top_files > 0
                          ? config.log_top_files
                          : std::numeric_limits<int>::max();
      EmpiricalDemand emp = empirical_demand(log, top_users, top_files);
      DemandModel d;
      d.p = emp.p;
      d.v = emp.v;
      d.Q = emp.Q;
      d.A = synthesize_locations(static_cast<int>(d.v.size()), config.n_bs,
                                 s.delta_a, s.seed + 1);
      return d;
    }
  }
  throw std::invalid_argument("config: bad demand source");
}

Experiment materialize(const ExperimentConfig& config) {
  Experiment ex;
  ex.config = config;
  ex.layout = layout_from_config(config);
  ex.subregions = build_subregions(ex.layout, config.K);
  FrequencyMode mode = config.frequency == "colored" ? FrequencyMode::colored
                                                     : FrequencyMode::orthogonal;
  ex.plan = build_frequency_plan(ex.layout, ex.subregions, mode);
  ex.table = table_from_config(config, ex.layout, ex.subregions, ex.plan);
  ex.demand = demand_from_config(config);
  for (const auto& row : ex.demand.A) {
    if (static_cast<int>(row.size()) != ex.layout.n_bs()) {
      throw std::invalid_argument(
          "config: demand location rows do not match the layout");
    }
  }
  return ex;
}

CachingPolicy make_policy(const std::string& name, const Experiment& ex,
                          double eta, SolverTrace* trace) {
  const ExperimentConfig& c = ex.config;
  auto solve = [&](const DemandModel& demand, double sol_eta) {
    auto [policy, tr] = solve_p0(demand, ex.subregions, ex.table, c.n_cache,
                                 sol_eta, c.solver);
    if (trace) *trace = tr;
    if (!tr.converged) {
      throw std::runtime_error("solver did not converge on policy " + name);
    }
    return policy;
  };
  if (name == "p0") return solve(ex.demand, eta);
  if (name == "policy1_pop") return solve(popularity_demand(ex.demand), 0.0);
  if (name == "policy2_pop") return solve(popularity_demand(ex.demand), 1.0);
  if (name == "local_pop") return policy_local_pop(ex.demand, c.n_cache);
  if (name == "femtocaching" || name == "femtocaching_up") {
    auto positions = sample_user_positions(ex.demand, ex.layout, c.seed);
    PreferenceMode mode = name == "femtocaching" ? PreferenceMode::popularity
                                                 : PreferenceMode::individual;
    return policy_femtocaching(ex.demand, ex.layout, ex.plan, c.radio,
                               ex.table, positions, mode, c.n_cache);
  }
  throw std::invalid_argument("unknown policy " + name);
}

std::vector<std::string> cmd_tables(const ExperimentConfig& config) {
  Experiment ex = materialize(config);
  std::string path = out_path(config, "table_" + config.metric + ".json");
  atomic_write(path, table_to_json(ex.table));
  std::vector<std::string> artifacts = {path};
  save_manifest(out_path(config, "manifest.json"), config, artifacts);
  artifacts.push_back(out_path(config, "manifest.json"));
  return artifacts;
}

std::vector<std::string> cmd_synth(const ExperimentConfig& config) {
  DemandModel demand = demand_from_config(config);
  std::string path = out_path(config, "demand.json");
  save_demand(path, demand);
  std::vector<std::string> artifacts = {path};
  save_manifest(out_path(config, "manifest.json"), config, artifacts);
  artifacts.push_back(out_path(config, "manifest.json"));
  return artifacts;
}

std::vector<std::string> cmd_optimize(const ExperimentConfig& config) {
  Experiment ex = materialize(config);
  SolverTrace trace;
  CachingPolicy policy = make_policy("p0", ex, config.eta, &trace);
  std::string policy_path = out_path(config, "policy.csv");
  std::string trace_path = out_path(config, "trace.csv");
  save_policy_csv(policy_path, policy, config_hash(config));
  save_trace_csv(trace_path, trace);
  std::vector<std::string> artifacts = {policy_path, trace_path};
  save_manifest(out_path(config, "manifest.json"), config, artifacts);
  artifacts.push_back(out_path(config, "manifest.json"));
  return artifacts;
}

std::vector<std::string> cmd_evaluate(const ExperimentConfig& config) {
  Experiment ex = materialize(config);
  std::string policy_path = out_path(config, "policy.csv");
  CachingPolicy policy;
  if (fs::exists(policy_path)) {
    policy = load_policy_csv(policy_path);
    if (policy.n_files() != ex.demand.n_files() ||
        policy.n_bs() != ex.layout.n_bs()) {
      throw std::invalid_argument("policy.csv does not match the config");
    }
  } else {
    policy = make_policy("p0", ex, config.eta);
    save_policy_csv(policy_path, policy, config_hash(config));
  }

  SimOptions opt;
  opt.n_requests = config.sim_requests;
  opt.epochs = config.sim_epochs;
  opt.threads = config.sim_threads;
  opt.seed = config.seed;
  opt.record_rate_samples = true;
  SimResult result = simulate(policy, ex.demand, ex.layout, ex.subregions,
                              ex.plan, config.radio, config.gamma0(), opt);

  std::string sim_path = out_path(config, "simulation.csv");
  save_simulation_csv(sim_path, result);

  std::vector<double> pooled;
  for (const auto& samples : result.rate_samples) {
    pooled.insert(pooled.end(), samples.begin(), samples.end());
  }
  std::sort(pooled.begin(), pooled.end());
  std::ostringstream cdf;
  cdf << "quantile,rate_bps\n";
  for (int q = 0; q <= 100; ++q) {
    std::size_t idx = pooled.empty()
                          ? 0
                          : std::min(pooled.size() - 1,
                                     static_cast<std::size_t>(
                                         q / 100.0 * (pooled.size() - 1)));
    cdf << (q / 100.0) << "," << fmt(pooled.empty() ? 0.0 : pooled[idx])
        << "\n";
  }
  std::string cdf_path = out_path(config, "rate_cdf.csv");
  atomic_write(cdf_path, cdf.str());

  std::vector<std::string> artifacts = {policy_path, sim_path, cdf_path};
  save_manifest(out_path(config, "manifest.json"), config, artifacts);
  artifacts.push_back(out_path(config, "manifest.json"));
  return artifacts;
}

std::vector<std::string> cmd_ingest(const ExperimentConfig& config) {
  if (config.source != DemandSourceKind::log) {
    throw std::invalid_argument("ingest needs demand.source = log");
  }
  DemandModel demand = demand_from_config(config);
  std::string demand_path = out_path(config, "demand.json");
  save_demand(demand_path, demand);

  auto fit_sorted = [](std::vector<double> pmf) {
    std::sort(pmf.begin(), pmf.end(), std::greater<double>());
    return fit_mzipf(pmf);
  };
  MZipfFit fit_p = fit_sorted(demand.p);
  MZipfFit fit_v = fit_sorted(demand.v);
  json report;
  report["n_users"] = demand.n_users();
  report["n_files"] = demand.n_files();
  report["popularity"] = {{"beta", fit_p.beta},
                          {"delta", fit_p.delta},
                          {"excluded_zeros", fit_p.excluded_zeros}};
  report["activity"] = {{"beta", fit_v.beta},
                        {"delta", fit_v.delta},
                        {"excluded_zeros", fit_v.excluded_zeros}};
  std::string report_path = out_path(config, "mzipf_report.json");
  atomic_write(report_path, report.dump(2) + "\n");

  std::vector<std::string> artifacts = {demand_path, report_path};
  save_manifest(out_path(config, "manifest.json"), config, artifacts);
  artifacts.push_back(out_path(config, "manifest.json"));
  return artifacts;
}

std::vector<std::string> cmd_sweep(const ExperimentConfig& config,
                                   const SweepRequest& req) {
  static const std::set<std::string> kAxes = {"eta", "similarity", "delta_a",
                                              "delta_v"};
  static const std::set<std::string> kPolicies = {
      "p0",           "local_pop",   "femtocaching",
      "femtocaching_up", "policy1_pop", "policy2_pop"};
  if (!kAxes.count(req.axis)) {
    throw std::invalid_argument("sweep: unknown axis " + req.axis);
  }
  if (req.grid.empty()) throw std::invalid_argument("sweep: empty grid");
  if (req.policies.empty()) {
    throw std::invalid_argument("sweep: no policies");
  }
  for (const auto& p : req.policies) {
    if (!kPolicies.count(p)) {
      throw std::invalid_argument("sweep: unknown policy " + p);
    }
  }
  if (req.n_seeds < 1 || req.workers < 1) {
    throw std::invalid_argument("sweep: seeds and workers must be >= 1");
  }
  if (req.axis != "eta" && config.source != DemandSourceKind::synthesize) {
    throw std::invalid_argument(
        "sweep: axis " + req.axis + " needs demand.source = synthesize");
  }
  if (req.axis == "eta") {
    for (double g : req.grid) {
      if (g < 0.0 || g > 1.0) {
        throw std::invalid_argument("sweep: eta grid must lie in [0, 1]");
      }
    }
  }

  bool rate = config.metric == "rate";
  int n_pol = static_cast<int>(req.policies.size());
  int n_points = static_cast<int>(req.grid.size()) * req.n_seeds;
  std::vector<SweepCell> cells(
      static_cast<std::size_t>(n_points) * n_pol);

  auto run_point = [&](int point) {
    int gi = point / req.n_seeds;
    int si = point % req.n_seeds;
    double value = req.grid[gi];
    std::uint64_t seed = config.seed + static_cast<std::uint64_t>(si);

    ExperimentConfig local = config;
    local.seed = seed;
    local.synth.seed = config.synth.seed + static_cast<std::uint64_t>(si);
    if (req.axis == "eta") {
      local.eta = value;
    } else if (req.axis == "similarity") {
      local.synth.target_similarity = value;
    } else if (req.axis == "delta_a") {
      local.synth.delta_a = value;
    } else {
      local.synth.delta_v = value;
    }

    SweepCell base;
    base.axis_value = value;
    base.seed = seed;

    Experiment ex;
    std::string setup_error;
    try {
      ex = materialize(local);
    } catch (const std::exception& e) {
      setup_error = e.what();
    }
    for (int pi = 0; pi < n_pol; ++pi) {
      SweepCell cell = base;
      cell.policy = req.policies[pi];
      if (!setup_error.empty()) {
        cell.failed = true;
        cell.error = setup_error;
      } else {
        try {
          CachingPolicy policy = make_policy(cell.policy, ex, local.eta);
          SimOptions opt;
          opt.n_requests = local.sim_requests;
          opt.epochs = local.sim_epochs;
          opt.seed = seed;
          SimResult result =
              simulate(policy, ex.demand, ex.layout, ex.subregions, ex.plan,
                       local.radio, local.gamma0(), opt);
          cell.network = rate ? result.network_rate_bps
                              : result.network_success;
          cell.min_value = min_defined(result, rate);
        } catch (const std::exception& e) {
          cell.failed = true;
          cell.error = e.what();
        }
      }
      cells[static_cast<std::size_t>(point) * n_pol + pi] = cell;
    }
  };

  if (req.workers == 1) {
    for (int point = 0; point < n_points; ++point) run_point(point);
  } else {
    std::atomic<int> next{0};
    auto worker = [&] {
      for (int point = next.fetch_add(1); point < n_points;
           point = next.fetch_add(1)) {
        run_point(point);
      }
    };
    std::vector<std::thread> pool;
    int n_workers = std::min(req.workers, n_points);
    pool.reserve(n_workers);
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::string sweep_path = out_path(config, "sweep_" + req.axis + ".csv");
  save_sweep_csv(sweep_path, req.axis, cells);
  std::vector<std::string> artifacts = {sweep_path};
  save_manifest(out_path(config, "manifest.json"), config, artifacts);
  artifacts.push_back(out_path(config, "manifest.json"));
  return artifacts;
}

std::vector<std::string> cmd_toy(const std::string& out_dir) {
  struct Toy {
    std::string name;
    SubregionTable part;
    UtilityTable table;
    DemandModel demand;
    double eta;
  };

  auto one_cell = [] {
    SubregionTable t;
    t.K = 1;
    t.cell_area = {1.0};
    Subregion r;
    r.cell = 0;
    r.index_in_cell = 0;
    r.order = {0};
    r.area = 1.0;
    t.by_cell = {{r}};
    return t;
  };
  auto two_cell = [] {
    SubregionTable t;
    t.K = 2;
    t.cell_area = {1.0, 1.0};
    Subregion r0, r1;
    r0.cell = 0;
    r0.index_in_cell = 0;
    r0.order = {0, 1};
    r0.area = 1.0;
    r1.cell = 1;
    r1.index_in_cell = 0;
    r1.order = {1, 0};
    r1.area = 1.0;
    t.by_cell = {{r0}, {r1}};
    return t;
  };
  auto demand_for = [](bool heterogeneous, int n_cells) {
    DemandModel d;
    d.v = {0.6, 0.4};
    if (heterogeneous) {
      d.Q = {{0.75, 0.25, 0.0}, {0.02, 0.38, 0.60}};
    } else {
      d.Q = {{0.458, 0.302, 0.24}, {0.458, 0.302, 0.24}};
    }
    d.p.assign(3, 0.0);
    for (int u = 0; u < 2; ++u) {
      for (int f = 0; f < 3; ++f) d.p[f] += d.v[u] * d.Q[u][f];
    }
    if (n_cells == 1) {
      d.A = {{1.0}, {1.0}};
    } else {
      d.A = {{1.0, 0.0}, {0.0, 1.0}};
    }
    return d;
  };

  std::vector<Toy> toys;
  {
    auto part1 = one_cell();
    auto table1 = make_uniform_table(part1, {3e6}, 1e6);
    toys.push_back({"one_cell_shared_eta0", part1, table1,
                    demand_for(false, 1), 0.0});
    toys.push_back({"one_cell_split_eta0", part1, table1,
                    demand_for(true, 1), 0.0});
    toys.push_back({"one_cell_split_eta1", part1, table1,
                    demand_for(true, 1), 1.0});
    auto part2 = two_cell();
    auto table2 = make_uniform_table(part2, {3e6, 2e6}, 1e6);
    toys.push_back({"two_cell_split_eta0", part2, table2,
                    demand_for(true, 2), 0.0});
    toys.push_back({"two_cell_shared_eta1", part2, table2,
                    demand_for(false, 2), 1.0});
  }

  std::ostringstream summary;
  summary << "instance,eta,network_bps,min_bps,iterations,converged\n";
  std::vector<std::string> artifacts;
  SolveOptions opt;
  opt.tol = 1e-6;
  for (const Toy& toy : toys) {
    auto [policy, trace] = solve_p0(toy.demand, toy.part, toy.table, 1,
                                    toy.eta, opt);
    std::string path =
        (fs::path(out_dir) / ("toy_" + toy.name + ".csv")).string();
    save_policy_csv(path, policy, "toy");
    artifacts.push_back(path);
    double network = network_utility(toy.demand, toy.part, toy.table, policy);
    MinUtility worst = min_utility(toy.demand, toy.part, toy.table, policy);
    summary << toy.name << "," << fmt(toy.eta) << "," << fmt(network) << ","
            << fmt(worst.value) << "," << trace.rows.size() << ","
            << (trace.converged ? 1 : 0) << "\n";
  }
  std::string summary_path = (fs::path(out_dir) / "toy_summary.csv").string();
  atomic_write(summary_path, summary.str());
  artifacts.push_back(summary_path);
  return artifacts;
}

}  // namespace edgecache
