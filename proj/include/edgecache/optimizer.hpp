#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "edgecache/demand.hpp"
#include "edgecache/geometry.hpp"
#include "edgecache/utility.hpp"

namespace edgecache {

// The cache design problem minimizes, over z = 1 - c,
//   (1 - eta) * sum_u v_u g_u(z) + eta * t
// subject to g_u(z) + shift_u <= t, per-BS cache budgets and box bounds,
// where g_u is a posynomial with coefficients from rank-difference service
// values. Service tables are normalized so coefficients are O(1); reported
// utilities are always recomputed from c through the utility module.
enum class TelescopeForm {
  consecutive,  // rank differences T_k - T_{k+1} (identity-verified default)
  anchor,       // rank differences T_k - T_{K+1} (kept for comparison)
};

struct SpProblem {
  int n_files = 0;
  int n_bs = 0;
  int n_cache = 0;
  double eta = 0.0;
  double z_min = 1e-6;
  double scale = 1.0;  // table normalization; utilities = scale * (C_u - g_u)

  std::vector<std::vector<int>> prefix_bs;  // monomial BS lists
  Matrix user_geo;                          // n_users x n_prefix weights
  Matrix q;                                 // preference rows (copied)
  std::vector<double> v;                    // activity (copied)
  std::vector<double> cu;                   // per-user utility constants
  std::vector<double> shift;                // C_max - C_u fairness offsets

  int n_users() const { return static_cast<int>(v.size()); }
  int n_prefix() const { return static_cast<int>(prefix_bs.size()); }

  // Posynomial g_u at a caching-complement matrix z (n_files x n_bs).
  double g_user(int u, const Matrix& z) const;
  // (1 - eta) sum_u v_u g_u(z) + eta * t.
  double objective(const Matrix& z, double t) const;
  // Expected service value of user u implied by the problem data; must match
  // the utility module on consistent inputs.
  double utility_from_sp(int u, const Matrix& z) const;
};

struct SpOptions {
  double z_min = 1e-6;
  TelescopeForm form = TelescopeForm::consecutive;
};

SpProblem build_sp(const DemandModel& demand, const SubregionTable& subregions,
                   const UtilityTable& table, int n_cache, double eta,
                   const SpOptions& opt = {});

// One affine-in-log cache constraint per BS:
//   (N_f - N_c) prod_f (z_fb / eps_fb)^(-eps_fb) <= 1.
struct CondensedCache {
  bool active = true;  // false when the budget cannot bind (N_c >= N_f)
  Matrix eps;
  std::vector<double> log_const;  // ln(N_f - N_c) + sum_f eps ln eps

  double value(const Matrix& z, int b) const;
};

CondensedCache condense_gp(const SpProblem& sp, const Matrix& eps);

struct GpOptions {
  double barrier_gap = 1e-6;  // duality-gap bound m / tau at the last stage
  double tau0 = 1.0;
  double mu = 5.0;  // gentle schedule keeps each stage inside Newton's zone
  int newton_max = 4000;    // total Newton steps across barrier stages
  double newton_tol = 1e-9;  // decrement^2 / 2 stage exit, relative to tau
};

struct GpResult {
  Matrix z;
  double t = 0.0;
  double objective = 0.0;
  int newton_iters = 0;
  bool converged = true;
};

// Barrier Newton solve of the condensed subproblem in log variables from a
// strictly feasible start.
GpResult solve_gp(const SpProblem& sp, const CondensedCache& cache,
                  const Matrix& z_init, double t_init,
                  const GpOptions& opt = {});

struct TraceRow {
  double objective = 0.0;      // normalized subproblem objective
  double step_norm = 0.0;      // Frobenius distance to the previous iterate
  double max_violation = 0.0;  // worst constraint violation (>= 0)
};

struct SolverTrace {
  std::vector<TraceRow> rows;
  std::vector<Matrix> eps_history;
  int iterations = 0;
  bool converged = false;
  bool objective_monotone = true;  // nonincreasing within 1e-8
};

struct SolveOptions {
  double tol = 1e-5;  // outer stopping threshold on the step norm
  int max_iter = 300;
  double interior_shift = 1e-3;  // pull-in factor for warm starts
  // Barrier start for warm outer iterations; the first iteration always
  // begins at gp.tau0. Falls back to a cold solve if the warm one fails.
  double warm_tau0 = 1e6;
  SpOptions sp;
  GpOptions gp;
};

// Outer successive-condensation loop from the uniform start c = N_c / N_f.
std::pair<CachingPolicy, SolverTrace> solve_p0(const DemandModel& demand,
                                               const SubregionTable& subregions,
                                               const UtilityTable& table,
                                               int n_cache, double eta,
                                               const SolveOptions& opt = {});

// Deterministic baseline: per cell, cache the n_cache files with the largest
// local popularity, ties to the lower file index.
CachingPolicy policy_local_pop(const DemandModel& demand, int n_cache);

enum class PreferenceMode { individual, popularity };

struct UserPosition {
  int cell = 0;
  Vec2 point{};
};

// One position per user: cell drawn from the user's location pmf, point
// uniform in that cell.
std::vector<UserPosition> sample_user_positions(const DemandModel& demand,
                                                const NetworkLayout& layout,
                                                std::uint64_t seed);

// Greedy marginal-gain placement (exactly n_cache files per BS) against the
// network utility at fixed user positions, with exact per-position service
// values. PreferenceMode::popularity scores with p and uniform activity.
CachingPolicy policy_femtocaching(const DemandModel& demand,
                                  const NetworkLayout& layout,
                                  const FrequencyPlan& plan,
                                  const RadioConfig& radio,
                                  const UtilityTable& table,
                                  const std::vector<UserPosition>& positions,
                                  PreferenceMode mode, int n_cache);

// Exhaustive reference: deterministic placements for eta = 0, a grid over
// the probability boxes otherwise. Refuses instances that are not tiny.
CachingPolicy brute_force_policy(const DemandModel& demand,
                                 const SubregionTable& subregions,
                                 const UtilityTable& table, int n_cache,
                                 double eta, double grid_step = 0.05);

// Same demand with every preference row replaced by the popularity pmf and
// uniform activity (the popularity-only variants of the optimized policies).
DemandModel popularity_demand(const DemandModel& demand);

// Combined objective both solver and references maximize.
double p0_objective(const DemandModel& demand, const SubregionTable& subregions,
                    const UtilityTable& table, const CachingPolicy& policy,
                    double eta);

}  // namespace edgecache
