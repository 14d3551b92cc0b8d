#pragma once

#include <string>
#include <vector>

#include "edgecache/io.hpp"

namespace edgecache {

// A config materialized into the objects every command works with. The
// utility table honors the fixed-value override and the disk cache.
struct Experiment {
  ExperimentConfig config;
  NetworkLayout layout;
  SubregionTable subregions;
  FrequencyPlan plan;
  UtilityTable table;
  DemandModel demand;
};

NetworkLayout layout_from_config(const ExperimentConfig& config);
DemandModel demand_from_config(const ExperimentConfig& config);
Experiment materialize(const ExperimentConfig& config);

// Compute (or resynthesize) the policy named by one of: p0, local_pop,
// femtocaching, femtocaching_up, policy1_pop, policy2_pop. p0 uses eta; the
// _pop variants solve against the popularity-collapsed demand at eta 0 / 1.
CachingPolicy make_policy(const std::string& name, const Experiment& ex,
                          double eta, SolverTrace* trace = nullptr);

// Subcommand bodies. Each writes its artifacts under config.out_dir plus a
// run manifest, and returns the artifact paths. Validation problems throw
// std::invalid_argument, solver failures std::runtime_error.
std::vector<std::string> cmd_tables(const ExperimentConfig& config);
std::vector<std::string> cmd_synth(const ExperimentConfig& config);
std::vector<std::string> cmd_optimize(const ExperimentConfig& config);
std::vector<std::string> cmd_evaluate(const ExperimentConfig& config);
std::vector<std::string> cmd_ingest(const ExperimentConfig& config);

struct SweepRequest {
  std::string axis = "eta";  // eta | similarity | delta_a | delta_v
  std::vector<double> grid;
  std::vector<std::string> policies = {"p0"};
  int n_seeds = 1;
  int workers = 1;
};

std::vector<std::string> cmd_sweep(const ExperimentConfig& config,
                                   const SweepRequest& req);

// Bundled closed-form examples: one- and two-cell instances solved end to
// end, with policies and traces written for inspection.
std::vector<std::string> cmd_toy(const std::string& out_dir);

}  // namespace edgecache
