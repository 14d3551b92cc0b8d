#pragma once

#include <cstdint>
#include <vector>

#include "edgecache/demand.hpp"
#include "edgecache/geometry.hpp"
#include "edgecache/rng.hpp"
#include "edgecache/utility.hpp"

namespace edgecache {

// Draw one cache content set for a BS from its probability column by block
// stacking: segments of length c_f are laid contiguously across n_cache unit
// slots and a single uniform offset picks one file per slot. Inclusion
// probability of file f is exactly c_f, and exactly n_cache files are drawn
// when the column sums to n_cache. Returns ascending file indices.
std::vector<int> realize_cache(const std::vector<double>& column, int n_cache,
                               Pcg32& rng);

struct Request {
  int user = 0;
  int file = 0;
  int cell = 0;
  Vec2 point{};
};

// user ~ activity, file ~ that user's preference row, cell ~ that user's
// location row, point uniform in the cell.
Request sample_request(const DemandModel& demand, const NetworkLayout& layout,
                       Pcg32& rng);

struct RequestOutcome {
  int user = 0;
  int file = 0;
  int cell = 0;
  Vec2 point{};
  int serving = 0;        // transmitting BS (the local BS on a cache miss)
  bool backhaul = false;  // true when no K-NN BS held the file
  double sinr = 0.0;
  bool success = false;   // cache-served and SINR above the threshold
  double rate_bps = 0.0;
};

struct UserStats {
  long requests = 0;
  bool defined = false;  // false when the user drew no requests
  double success = 0.0;
  double success_se = 0.0;
  double rate_bps = 0.0;
  double rate_se = 0.0;
};

struct SimOptions {
  long n_requests = 200000;
  int epochs = 100;  // cache realizations drawn per run
  std::uint64_t seed = 1;
  int threads = 1;
  bool record_outcomes = false;
  bool record_rate_samples = false;
  std::vector<double> per_user_bandwidth;  // optional, size n_users
  std::vector<double> per_user_backhaul;   // optional, size n_users
};

struct SimResult {
  std::vector<UserStats> users;
  double network_success = 0.0;
  double network_rate_bps = 0.0;
  long n_requests = 0;
  std::vector<RequestOutcome> outcomes;           // when recorded
  std::vector<std::vector<double>> rate_samples;  // per user, when recorded
};

// Monte Carlo measurement of a caching policy. Requests are independent:
// each draws (user, file, cell, position) from the demand model, associates
// with the nearest BS in the K-NN list that holds the file (K from the
// partition), falls back to the local BS's backhaul otherwise, and draws
// Rayleigh fading on the serving and co-channel links. Per-request RNG
// streams are keyed by request index, so thread count never changes any
// sampled value; caches are re-realized each epoch from their own streams.
SimResult simulate(const CachingPolicy& policy, const DemandModel& demand,
                   const NetworkLayout& layout,
                   const SubregionTable& subregions, const FrequencyPlan& plan,
                   const RadioConfig& radio, double gamma0,
                   const SimOptions& opt = {});

}  // namespace edgecache
