#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "edgecache/demand.hpp"
#include "edgecache/geometry.hpp"
#include "edgecache/optimizer.hpp"
#include "edgecache/simulator.hpp"
#include "edgecache/utility.hpp"

namespace edgecache {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kConfigFormat = 1;

// Demand synthesis knobs: M-Zipf popularity and activity, Zipf cell
// locality, and preference uniformity theta. A nonnegative
// target_similarity overrides theta via bisection calibration.
struct SynthesisSpec {
  int n_users = 10;
  int n_files = 30;
  double beta_p = 0.0;
  double delta_p = 0.6;
  double beta_v = 0.0;
  double delta_v = 0.4;
  double delta_a = 1.0;
  double theta = 0.5;
  double target_similarity = -1.0;
  std::uint64_t seed = 1;
};

enum class DemandSourceKind { synthesize, file, log };

// Fixed per-rank service values replace the computed radio tables; used by
// the bundled toy configurations and in tests.
struct FixedTableSpec {
  bool enabled = false;
  std::vector<double> per_rank;
  double backhaul = 0.0;
};

// One experiment end to end: layout, radio, demand source, cache budget,
// objective blend and solver/simulation settings. Parsed from JSON.
struct ExperimentConfig {
  std::string name = "experiment";

  std::string layout = "hexagonal";  // "hexagonal" | "explicit"
  int n_bs = 7;
  double cell_radius_m = 40.0;
  std::vector<Vec2> sites;  // explicit layouts only
  int K = 3;
  std::string frequency = "colored";  // "colored" | "orthogonal"

  RadioConfig radio;
  std::string metric = "rate";  // "rate" | "success"
  double gamma0_db = -5.0;
  FixedTableSpec fixed_table;

  DemandSourceKind source = DemandSourceKind::synthesize;
  SynthesisSpec synth;
  std::string demand_file;
  std::string log_file;
  int log_top_users = 0;  // 0 keeps every user / file
  int log_top_files = 0;

  int n_cache = 3;
  double eta = 0.0;
  SolveOptions solver;
  long sim_requests = 200000;
  int sim_epochs = 100;
  int sim_threads = 1;
  std::uint64_t seed = 1;
  std::string out_dir = "out";

  double gamma0() const;  // linear scale
};

// Parse and validate; file paths inside the config are resolved against
// base_dir. Throws std::invalid_argument on malformed or out-of-range input.
ExperimentConfig parse_config(const std::string& json_text,
                              const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

// Canonical (sorted-key) JSON rendering of a config; equal configs hash
// equally across platforms.
std::string canonical_config(const ExperimentConfig& config);
std::uint64_t fnv1a64(const std::string& text);
std::string config_hash(const ExperimentConfig& config);  // 16 hex digits

// Write via a sibling temp file plus rename; readers never observe a
// partially written artifact.
void atomic_write(const std::string& path, const std::string& content);

std::string demand_to_json(const DemandModel& demand);
DemandModel demand_from_json(const std::string& text);
void save_demand(const std::string& path, const DemandModel& demand);
DemandModel load_demand(const std::string& path);

// Policy CSV: a comment header carrying n_cache and the config hash, a
// column header, then one row of caching probabilities per file.
void save_policy_csv(const std::string& path, const CachingPolicy& policy,
                     const std::string& hash);
CachingPolicy load_policy_csv(const std::string& path);

void save_trace_csv(const std::string& path, const SolverTrace& trace);
void save_simulation_csv(const std::string& path, const SimResult& result);

// One sweep grid cell; failed cells keep their error text and are skipped
// by downstream plotting.
struct SweepCell {
  double axis_value = 0.0;
  std::string policy;
  std::uint64_t seed = 0;
  double network = 0.0;
  double min_value = 0.0;
  bool failed = false;
  std::string error;
};

void save_sweep_csv(const std::string& path, const std::string& axis,
                    const std::vector<SweepCell>& cells);

void save_manifest(const std::string& path, const ExperimentConfig& config,
                   const std::vector<std::string>& artifacts);

// Utility-table disk cache, keyed by the geometry/radio part of the config
// hash. Disabled (empty dir) unless EDGECACHE_CACHE_DIR is set.
std::string table_cache_dir();
std::string table_to_json(const UtilityTable& table);
UtilityTable table_from_json(const std::string& text);
std::optional<UtilityTable> load_cached_table(const std::string& key);
void store_cached_table(const std::string& key, const UtilityTable& table);

}  // namespace edgecache
