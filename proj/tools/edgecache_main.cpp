#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "edgecache/experiment.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::string metric;
  long seed = -1;
  double eta = -1.0;
};

void add_common(CLI::App* cmd, CommonArgs* args, bool config_required) {
  auto* config =
      cmd->add_option("--config", args->config_path, "Experiment config JSON");
  if (config_required) config->required();
  cmd->add_option("--out", args->out_dir, "Output directory override");
  cmd->add_option("--seed", args->seed, "Seed override");
  cmd->add_option("--metric", args->metric,
                  "Metric override (rate or success)");
  cmd->add_option("--eta", args->eta, "Objective blend override in [0, 1]");
}

edgecache::ExperimentConfig load_with_overrides(const CommonArgs& args) {
  edgecache::ExperimentConfig config = edgecache::load_config(args.config_path);
  if (!args.out_dir.empty()) config.out_dir = args.out_dir;
  if (args.seed >= 0) config.seed = static_cast<std::uint64_t>(args.seed);
  if (!args.metric.empty()) {
    if (args.metric != "rate" && args.metric != "success") {
      throw std::invalid_argument("--metric must be rate or success");
    }
    config.metric = args.metric;
  }
  if (args.eta >= 0.0) {
    if (args.eta > 1.0) throw std::invalid_argument("--eta must be in [0, 1]");
    config.eta = args.eta;
  }
  return config;
}

void report(const std::vector<std::string>& artifacts) {
  for (const auto& path : artifacts) std::printf("wrote %s\n", path.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Edge cache placement: tables, demand synthesis, "
               "optimization, simulation and sweeps"};
  app.require_subcommand(1);

  CommonArgs tables_args, synth_args, optimize_args, evaluate_args,
      ingest_args, sweep_args;
  std::string sweep_axis = "eta";
  std::vector<double> sweep_grid;
  std::vector<std::string> sweep_policies = {"p0"};
  int sweep_seeds = 1;
  int sweep_workers = 1;
  std::string toy_out = "out";

  auto* tables = app.add_subcommand("tables", "Compute utility tables");
  add_common(tables, &tables_args, true);
  auto* synth = app.add_subcommand("synth", "Synthesize a demand model");
  add_common(synth, &synth_args, true);
  auto* optimize = app.add_subcommand("optimize", "Solve for a policy");
  add_common(optimize, &optimize_args, true);
  auto* evaluate = app.add_subcommand("evaluate", "Simulate a policy");
  add_common(evaluate, &evaluate_args, true);
  auto* ingest = app.add_subcommand("ingest", "Fit demand from a request log");
  add_common(ingest, &ingest_args, true);

  auto* sweep = app.add_subcommand("sweep", "Grid sweep of policies");
  add_common(sweep, &sweep_args, true);
  sweep->add_option("--axis", sweep_axis,
                    "Axis: eta, similarity, delta_a or delta_v");
  sweep->add_option("--grid", sweep_grid, "Axis values")
      ->required()
      ->delimiter(',');
  sweep->add_option("--policies", sweep_policies, "Policies to compare")
      ->delimiter(',');
  sweep->add_option("--seeds", sweep_seeds, "Seeds per grid point");
  sweep->add_option("--workers", sweep_workers, "Worker threads");

  auto* toy = app.add_subcommand("toy", "Solve the bundled closed-form toys");
  toy->add_option("--out", toy_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (tables->parsed()) {
      report(edgecache::cmd_tables(load_with_overrides(tables_args)));
    } else if (synth->parsed()) {
      report(edgecache::cmd_synth(load_with_overrides(synth_args)));
    } else if (optimize->parsed()) {
      report(edgecache::cmd_optimize(load_with_overrides(optimize_args)));
    } else if (evaluate->parsed()) {
      report(edgecache::cmd_evaluate(load_with_overrides(evaluate_args)));
    } else if (ingest->parsed()) {
      report(edgecache::cmd_ingest(load_with_overrides(ingest_args)));
    } else if (sweep->parsed()) {
      edgecache::SweepRequest req;
      req.axis = sweep_axis;
      req.grid = sweep_grid;
      req.policies = sweep_policies;
      req.n_seeds = sweep_seeds;
      req.workers = sweep_workers;
      report(edgecache::cmd_sweep(load_with_overrides(sweep_args), req));
    } else if (toy->parsed()) {
      report(edgecache::cmd_toy(toy_out));
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
