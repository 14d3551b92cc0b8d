#pragma once

#include <cstdint>
#include <vector>

#include "edgecache/demand.hpp"
#include "edgecache/geometry.hpp"

namespace edgecache {

// Radio parameters. Distance-dependent loss const_db + slope_db*log10(r[m])
// is folded into an effective noise-to-power ratio so SINR reads
//   h_s r_s^-alpha / (sum_i h_i r_i^-alpha + noise_over_p()).
struct RadioConfig {
  double tx_power_dbm = 21.0;
  double noise_psd_dbm_hz = -174.0;
  double bandwidth_hz = 5e6;
  double backhaul_rate_bps = 1e6;
  double pathloss_const_db = 35.5;
  double pathloss_slope_db = 37.6;  // per decade of distance

  double alpha() const { return pathloss_slope_db / 10.0; }
  double noise_power_dbm() const;
  double noise_over_p() const;  // sigma^2 / (P * 10^(-const_db/10))
};

// Probability that the SINR from `serving` exceeds gamma0 at point x, with
// Rayleigh fading on the serving and all co-channel links (interference is
// full-buffer over the serving BS's colour group).
double success_probability_point(const NetworkLayout& layout,
                                 const FrequencyPlan& plan,
                                 const RadioConfig& radio, int serving,
                                 const Vec2& x, double gamma0);

// W * E_h[log2(1 + SINR)] in bit/s when served from `serving` at point x.
// Closed form via hypoexponential partial fractions and Ei.
double rate_point(const NetworkLayout& layout, const FrequencyPlan& plan,
                  const RadioConfig& radio, int serving, const Vec2& x);

// Expected delivery rate over the capacity-C backhaul at point x, serving BS
// = local BS: integral over t in [0, C] of P(W log2(1+SINR) > t).
double backhaul_rate_point(const NetworkLayout& layout,
                           const FrequencyPlan& plan, const RadioConfig& radio,
                           int local_bs, const Vec2& x);

// Count of near-equal-distance jitter events applied while forming partial
// fractions (diagnostic; reset returns the previous value).
long utility_jitter_events();
long utility_jitter_reset();

// Pathloss-folded propagation state of one serving link at point x: r_s^alpha,
// the co-channel interferers' r_b^alpha, and sigma^2/P' (1 mm distance floor,
// no tie adjustment). SINR with unit-mean fading h reads
//   (h_s / serving) / (sum_b h_b / interferers[b] + noise_over_p).
struct LinkGains {
  double serving = 0.0;
  std::vector<double> interferers;
  double noise_over_p = 0.0;
};

LinkGains link_gains(const NetworkLayout& layout, const FrequencyPlan& plan,
                     const RadioConfig& radio, int serving, const Vec2& x);

enum class Metric { success, rate };

// Area-averaged per-(cell, sub-region, rank) service values. Entry k in
// 1..K is the metric when served by the k-th listed BS; entry K+1 is the
// backhaul fallback (0 for the success metric). Groups collapse users that
// share bandwidth and backhaul capacity; group 0 is the common default.
struct UtilityTable {
  Metric metric = Metric::rate;
  double gamma0 = 0.0;
  int K = 1;
  int n_groups = 1;
  std::vector<int> user_group;       // empty: every user in group 0
  std::vector<int> region_offset;    // flat index of (cell, 0)
  std::vector<double> values;        // [(g * total + region) * (K+1) + k-1]
  std::vector<double> errors;        // matching quadrature/MC error estimates
  bool quadrature_converged = true;

  int total_regions() const {
    return region_offset.empty() ? 0 : region_offset.back();
  }
  int flat_index(int cell, int j) const { return region_offset[cell] + j; }
  double value(int group, int cell, int j, int k) const {
    return values[(static_cast<std::size_t>(group) * total_regions() +
                   flat_index(cell, j)) *
                      (K + 1) +
                  (k - 1)];
  }
  int group_of(int user) const {
    return user_group.empty() ? 0 : user_group[user];
  }
};

struct TableOptions {
  double quad_rel_tol = 1e-4;
  long mc_points = 100000;  // per sub-region, sampler-based layouts
  std::uint64_t seed = 2024;
  std::vector<double> per_user_bandwidth;  // optional, size n_users
  std::vector<double> per_user_backhaul;   // optional, size n_users
};

UtilityTable compute_utility_tables(const NetworkLayout& layout,
                                    const SubregionTable& subregions,
                                    const FrequencyPlan& plan,
                                    const RadioConfig& radio, Metric metric,
                                    double gamma0,
                                    const TableOptions& opt = {});

// Table with user-independent hand-set service values (testing and toy
// problems): per_k[k-1] for ranks 1..K plus a backhaul value.
UtilityTable make_uniform_table(const SubregionTable& subregions,
                                const std::vector<double>& per_k,
                                double backhaul);

// Caching probabilities, files x BSs, with per-BS budget sum_f c[f][b] <=
// n_cache (+1e-6 slack).
struct CachingPolicy {
  int n_cache = 0;
  Matrix c;

  int n_files() const { return static_cast<int>(c.size()); }
  int n_bs() const { return c.empty() ? 0 : static_cast<int>(c[0].size()); }
};

void validate_policy(const CachingPolicy& policy);

// Expected service value for one user: preference- and location-weighted
// mixture over sub-regions of the rank-k service values, where rank k wins
// with probability c_k * prod_{l<k} (1 - c_l) and the leftover probability
// falls through to the backhaul entry.
double user_utility(const DemandModel& demand, int user,
                    const SubregionTable& subregions, const UtilityTable& table,
                    const CachingPolicy& policy);

double network_utility(const DemandModel& demand,
                       const SubregionTable& subregions,
                       const UtilityTable& table, const CachingPolicy& policy);

struct MinUtility {
  double value = 0.0;
  int user = 0;  // lowest index attaining the minimum
};

MinUtility min_utility(const DemandModel& demand,
                       const SubregionTable& subregions,
                       const UtilityTable& table, const CachingPolicy& policy);

}  // namespace edgecache
