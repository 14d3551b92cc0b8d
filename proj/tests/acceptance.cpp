// Release gate: one end-to-end check per acceptance criterion. Each check
// prints a single "criterion N: PASS/FAIL (...)" line and the process exits
// nonzero when any executed check fails. Run a single criterion with
// --only N; without the flag all eight run in order and share one solver
// trace registry, which criterion 8 audits at the end.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include "edgecache/demand.hpp"
#include "edgecache/geometry.hpp"
#include "edgecache/optimizer.hpp"
#include "edgecache/rng.hpp"
#include "edgecache/simulator.hpp"
#include "edgecache/utility.hpp"
#include "support/oracles.hpp"

using namespace edgecache;

namespace {

std::string fmt(const char* f, ...) {
  va_list ap;
  va_start(ap, f);
  char buf[512];
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double s() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

struct CheckResult {
  bool ok = true;
  std::string reason;

  void fail(const std::string& why) {
    ok = false;
    append(why);
  }
  void note(const std::string& what) { append(what); }

 private:
  void append(const std::string& s) {
    if (!reason.empty()) reason += "; ";
    reason += s;
  }
};

// Every optimizer run done by any criterion lands here so that criterion 8
// can audit monotonicity and convergence speed across the whole gate.
struct RecordedSolve {
  std::string label;
  SolverTrace trace;
};
std::vector<RecordedSolve> g_solves;

CachingPolicy solve_recorded(const std::string& label, const DemandModel& d,
                             const SubregionTable& subs,
                             const UtilityTable& table, int n_cache, double eta,
                             const SolveOptions& opt) {
  auto [policy, trace] = solve_p0(d, subs, table, n_cache, eta, opt);
  g_solves.push_back({label, trace});
  return policy;
}

// ---------------------------------------------------------------------------
// Shared instance builders.

SubregionTable single_cell_partition() {
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
}

SubregionTable two_cell_partition() {
  SubregionTable t;
  t.K = 2;
  t.cell_area = {1.0, 1.0};
  Subregion r0;
  r0.cell = 0;
  r0.index_in_cell = 0;
  r0.order = {0, 1};
  r0.area = 1.0;
  Subregion r1;
  r1.cell = 1;
  r1.index_in_cell = 0;
  r1.order = {1, 0};
  r1.area = 1.0;
  t.by_cell = {{r0}, {r1}};
  return t;
}

// Rank-1 partition over nb independent cells, one region each.
SubregionTable flat_partition(int nb) {
  SubregionTable t;
  t.K = 1;
  t.cell_area.assign(nb, 1.0);
  t.by_cell.resize(nb);
  for (int b = 0; b < nb; ++b) {
    Subregion r;
    r.cell = b;
    r.index_in_cell = 0;
    r.order = {b};
    r.area = 1.0;
    t.by_cell[b] = {r};
  }
  return t;
}

// Two users, three files; either both preference rows equal the global
// popularity or user 1 leans to file 1 and user 2 to file 3.
DemandModel toy_demand(bool heterogeneous, int n_cells) {
  DemandModel d;
  d.v = {0.6, 0.4};
  if (heterogeneous) {
    d.Q = {{0.75, 0.25, 0.0}, {0.02, 0.38, 0.60}};
  } else {
    d.Q = {{0.46, 0.30, 0.24}, {0.46, 0.30, 0.24}};
  }
  d.p.assign(3, 0.0);
  for (int f = 0; f < 3; ++f) {
    d.p[f] = d.v[0] * d.Q[0][f] + d.v[1] * d.Q[1][f];
  }
  if (n_cells == 1) {
    d.A = {{1.0}, {1.0}};
  } else {
    d.A = {{1.0, 0.0}, {0.0, 1.0}};
  }
  return d;
}

std::vector<double> random_pmf(int n, Pcg32& rng, double floor = 0.05) {
  std::vector<double> p(n);
  double sum = 0.0;
  for (auto& x : p) {
    x = floor + rng.uniform();
    sum += x;
  }
  for (auto& x : p) x /= sum;
  return p;
}

// Random feasible policy: per BS, positive weights scaled to the cache
// budget with entries capped at 1 and the excess redistributed.
CachingPolicy random_policy(int nf, int nb, int n_cache, Pcg32& rng) {
  CachingPolicy pol;
  pol.n_cache = n_cache;
  pol.c.assign(nf, std::vector<double>(nb, 0.0));
  for (int b = 0; b < nb; ++b) {
    std::vector<double> w(nf);
    std::vector<char> capped(nf, 0);
    for (auto& x : w) x = 0.02 + rng.uniform();
    for (int round = 0; round < 64; ++round) {
      double free_sum = 0.0;
      double budget = n_cache;
      for (int f = 0; f < nf; ++f) {
        if (capped[f]) {
          budget -= 1.0;
        } else {
          free_sum += w[f];
        }
      }
      if (free_sum <= 0.0 || budget <= 0.0) break;
      double scale = budget / free_sum;
      bool changed = false;
      for (int f = 0; f < nf; ++f) {
        if (capped[f]) continue;
        w[f] *= scale;
        if (w[f] >= 1.0) {
          w[f] = 1.0;
          capped[f] = 1;
          changed = true;
        }
      }
      if (!changed) break;
    }
    for (int f = 0; f < nf; ++f) pol.c[f][b] = std::min(w[f], 1.0);
  }
  return pol;
}

DemandModel assemble_demand(const std::vector<double>& v, const Matrix& Q,
                            const Matrix& A) {
  DemandModel d;
  d.v = v;
  d.Q = Q;
  d.A = A;
  d.p.assign(Q[0].size(), 0.0);
  for (size_t u = 0; u < Q.size(); ++u) {
    for (size_t f = 0; f < Q[u].size(); ++f) d.p[f] += v[u] * Q[u][f];
  }
  return d;
}

double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }

struct DeskParts {
  NetworkLayout layout;
  SubregionTable subs;
  FrequencyPlan plan;
  UtilityTable table;
  std::vector<double> p;
  std::vector<double> v;
};

// Desk-scale network: 7 hexagonal cells of radius 40 m, K = 3, average rate
// at a -5 dB threshold, default radio, 10 users, 30 files.
DeskParts build_desk(FrequencyMode mode, Metric metric) {
  DeskParts d;
  d.layout = build_layout_hexagonal(7, 40.0);
  d.subs = build_subregions(d.layout, 3, {});
  d.plan = build_frequency_plan(d.layout, d.subs, mode);
  RadioConfig radio;
  d.table = compute_utility_tables(d.layout, d.subs, d.plan, radio, metric,
                                   db_to_lin(-5.0));
  d.p = mzipf_pmf(30, 0.0, 0.6);
  d.v = mzipf_pmf(10, 0.0, 0.4);
  return d;
}

// Exact max-min value for rank-1 tables. With K = 1 every utility is affine
// in the caching probabilities, so the eta = 1 optimum is the LP
//   max t  s.t.  t <= g_u(c),  sum_f c_fb <= n_cache,  0 <= c <= 1,
// solved by vertex enumeration.
double lp_maxmin_value(const DemandModel& d, double t1, double tb,
                       int n_cache) {
  int nf = d.n_files();
  int nu = d.n_users();
  int nb = static_cast<int>(d.A[0].size());
  int nv = nf * nb + 1;
  std::vector<std::vector<double>> a;
  std::vector<double> b;
  for (int u = 0; u < nu; ++u) {
    std::vector<double> row(nv, 0.0);
    for (int i = 0; i < nb; ++i) {
      for (int f = 0; f < nf; ++f) {
        row[f * nb + i] = -d.A[u][i] * d.Q[u][f] * (t1 - tb);
      }
    }
    row[nv - 1] = 1.0;
    a.push_back(row);
    b.push_back(tb);
  }
  for (int i = 0; i < nb; ++i) {
    std::vector<double> row(nv, 0.0);
    for (int f = 0; f < nf; ++f) row[f * nb + i] = 1.0;
    a.push_back(row);
    b.push_back(n_cache);
  }
  for (int j = 0; j < nf * nb; ++j) {
    std::vector<double> hi(nv, 0.0);
    hi[j] = 1.0;
    a.push_back(hi);
    b.push_back(1.0);
    std::vector<double> lo(nv, 0.0);
    lo[j] = -1.0;
    a.push_back(lo);
    b.push_back(0.0);
  }
  std::vector<double> tpos(nv, 0.0);
  tpos[nv - 1] = -1.0;
  a.push_back(tpos);
  b.push_back(0.0);
  std::vector<double> obj(nv, 0.0);
  obj[nv - 1] = 1.0;
  return test::lp_max_vertex(a, b, obj).value;
}

double spread(const std::vector<double>& xs) {
  double lo = *std::min_element(xs.begin(), xs.end());
  double hi = *std::max_element(xs.begin(), xs.end());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  return (hi - lo) / mean;
}

// ---------------------------------------------------------------------------
// Criterion 1: both toys reproduce their known optima.

CheckResult criterion1() {
  CheckResult r;
  SolveOptions opt;
  opt.tol = 1e-6;
  opt.max_iter = 400;

  auto subs1 = single_cell_partition();
  auto table1 = make_uniform_table(subs1, {3e6}, 1e6);

  {
    Timer t;
    auto pol = solve_recorded("toy1_hom_eta0", toy_demand(false, 1), subs1,
                              table1, 1, 0.0, opt);
    if (pol.c[0][0] < 1.0 - 1e-3 || pol.c[1][0] > 1e-3 || pol.c[2][0] > 1e-3) {
      r.fail(fmt("toy1 hom eta0 c=[%.4f,%.4f,%.4f], want file 1", pol.c[0][0],
                 pol.c[1][0], pol.c[2][0]));
    }
    if (t.s() > 5.0) r.fail(fmt("toy1 hom eta0 took %.1f s", t.s()));
  }
  {
    Timer t;
    auto pol = solve_recorded("toy1_het_eta0", toy_demand(true, 1), subs1,
                              table1, 1, 0.0, opt);
    if (pol.c[0][0] < 1.0 - 1e-3 || pol.c[1][0] > 1e-3 || pol.c[2][0] > 1e-3) {
      r.fail(fmt("toy1 het eta0 c=[%.4f,%.4f,%.4f], want file 1", pol.c[0][0],
                 pol.c[1][0], pol.c[2][0]));
    }
    if (t.s() > 5.0) r.fail(fmt("toy1 het eta0 took %.1f s", t.s()));
  }
  {
    Timer t;
    auto d = toy_demand(true, 1);
    auto pol = solve_recorded("toy1_het_eta1", d, subs1, table1, 1, 1.0, opt);
    if (pol.c[2][0] < 0.05) {
      r.fail(fmt("toy1 het eta1 puts %.4f on file 3, want mass", pol.c[2][0]));
    }
    double got = min_utility(d, subs1, table1, pol).value;
    double want = lp_maxmin_value(d, 3e6, 1e6, 1);
    if (std::abs(got / want - 1.0) > 1e-3) {
      r.fail(fmt("toy1 het eta1 min %.6g vs oracle %.6g", got, want));
    }
    if (t.s() > 5.0) r.fail(fmt("toy1 het eta1 took %.1f s", t.s()));
  }
  {
    Timer t;
    auto subs2 = two_cell_partition();
    auto table2 = make_uniform_table(subs2, {3e6, 2e6}, 1e6);
    auto pol = solve_recorded("toy2_het_eta0", toy_demand(true, 2), subs2,
                              table2, 1, 0.0, opt);
    bool bs1 = pol.c[0][0] > 1.0 - 1e-3 && pol.c[1][0] < 1e-3 &&
               pol.c[2][0] < 1e-3;
    bool bs2 = pol.c[2][1] > 1.0 - 1e-3 && pol.c[0][1] < 1e-3 &&
               pol.c[1][1] < 1e-3;
    if (!bs1 || !bs2) {
      r.fail(fmt("toy2 het eta0 c1=[%.4f,%.4f,%.4f] c2=[%.4f,%.4f,%.4f]",
                 pol.c[0][0], pol.c[1][0], pol.c[2][0], pol.c[0][1],
                 pol.c[1][1], pol.c[2][1]));
    }
    if (t.s() > 5.0) r.fail(fmt("toy2 het eta0 took %.1f s", t.s()));
  }
  if (r.ok) r.note("both toys at their known optima");
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 2: Monte Carlo agrees with the closed-form per-user success
// probability and average rate on the default 7-cell network.

CheckResult criterion2() {
  CheckResult r;
  Timer total;
  auto layout = build_layout_hexagonal(7, 40.0);
  auto subs = build_subregions(layout, 3, {});
  auto plan = build_frequency_plan(layout, subs, FrequencyMode::colored);
  RadioConfig radio;
  double gamma0 = db_to_lin(-5.0);
  auto tab_s =
      compute_utility_tables(layout, subs, plan, radio, Metric::success, gamma0);
  auto tab_r =
      compute_utility_tables(layout, subs, plan, radio, Metric::rate, gamma0);

  auto p = mzipf_pmf(30, 0.0, 0.6);
  auto v = mzipf_pmf(10, 0.0, 0.4);
  struct Variant {
    double theta, delta_a;
    std::uint64_t seed;
  };
  const Variant variants[3] = {{0.2, 1.0, 21}, {0.5, 0.0, 22}, {0.8, 2.0, 23}};
  std::vector<DemandModel> demands;
  for (const auto& va : variants) {
    demands.push_back(
        assemble_demand(v, synthesize_preferences(p, v, va.theta, va.seed),
                        synthesize_locations(10, 7, va.delta_a, va.seed)));
  }

  Pcg32 rng(2024, 11);
  long checked = 0;
  double worst_s = 0.0;
  double worst_r = 0.0;
  for (int pi = 0; pi < 10; ++pi) {
    auto policy = random_policy(30, 7, 3, rng);
    for (int di = 0; di < 3; ++di) {
      const auto& d = demands[di];
      SimOptions so;
      so.n_requests = 3200000;
      so.epochs = 100;
      so.seed = 1000 + static_cast<std::uint64_t>(pi) * 3 + di;
      auto sim = simulate(policy, d, layout, subs, plan, radio, gamma0, so);
      for (int u = 0; u < d.n_users(); ++u) {
        if (sim.users[u].requests < 200000) continue;
        ++checked;
        double s_cf = user_utility(d, u, subs, tab_s, policy);
        double r_cf = user_utility(d, u, subs, tab_r, policy);
        double ds = std::abs(sim.users[u].success - s_cf);
        double dr = std::abs(sim.users[u].rate_bps / r_cf - 1.0);
        worst_s = std::max(worst_s, ds);
        worst_r = std::max(worst_r, dr);
        if (ds > 0.01) {
          r.fail(fmt("policy %d demand %d user %d: success %.4f vs %.4f", pi,
                     di, u, sim.users[u].success, s_cf));
        }
        if (dr > 0.03) {
          r.fail(fmt("policy %d demand %d user %d: rate off by %.2f%%", pi, di,
                     u, dr * 100.0));
        }
      }
    }
  }
  if (checked == 0) r.fail("no user reached 2e5 requests");
  if (total.s() > 600.0) r.fail(fmt("took %.0f s, budget 600", total.s()));
  if (r.ok) {
    r.note(fmt("%ld user checks, max |ds|=%.4f, max rate dev=%.2f%%, %.0f s",
               checked, worst_s, worst_r * 100.0, total.s()));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 3: the four special-case reductions hold at desk scale.

CheckResult criterion3() {
  CheckResult r;
  Timer total;
  auto desk = build_desk(FrequencyMode::orthogonal, Metric::rate);
  Matrix A1 = synthesize_locations(10, 7, 1.0, 31);
  Matrix Q_het = synthesize_preferences(desk.p, desk.v, 0.5, 31);
  DemandModel het = assemble_demand(desk.v, Q_het, A1);

  // Deterministic placement at eta = 0.
  {
    SolveOptions opt;
    opt.tol = 1e-5;
    opt.max_iter = 400;
    auto pol =
        solve_recorded("c3_binary_eta0", het, desk.subs, desk.table, 3, 0.0, opt);
    double worst = 0.0;
    for (const auto& row : pol.c) {
      for (double c : row) worst = std::max(worst, std::min(c, 1.0 - c));
    }
    if (worst > 1e-3) {
      r.fail(fmt("eta0 policy has entry %.4g away from {0,1}", worst));
    }
  }

  // With identical preference rows and uniform locations the full problem
  // and its popularity-collapsed form are the same optimization.
  {
    Matrix Qp(10, desk.p);
    Matrix Au(10, std::vector<double>(7, 1.0 / 7.0));
    DemandModel hom = assemble_demand(desk.v, Qp, Au);
    DemandModel pop = popularity_demand(hom);
    Pcg32 rng(33, 5);
    for (int i = 0; i < 5; ++i) {
      auto policy = random_policy(30, 7, 3, rng);
      for (double eta : {0.0, 1.0}) {
        double jq = p0_objective(hom, desk.subs, desk.table, policy, eta);
        double jp = p0_objective(pop, desk.subs, desk.table, policy, eta);
        if (std::abs(jq - jp) > 1e-9 * std::max(jq, jp)) {
          r.fail(fmt("objective differs on policy %d eta %.0f: %.8g vs %.8g",
                     i, eta, jq, jp));
        }
      }
    }
    SolveOptions opt;
    opt.tol = 1e-3;
    opt.max_iter = 150;
    auto pol_q =
        solve_recorded("c3_equiv_full", hom, desk.subs, desk.table, 3, 0.0, opt);
    auto pol_p =
        solve_recorded("c3_equiv_pop", pop, desk.subs, desk.table, 3, 0.0, opt);
    double jq = p0_objective(hom, desk.subs, desk.table, pol_q, 0.0);
    double jp = p0_objective(pop, desk.subs, desk.table, pol_p, 0.0);
    if (std::abs(jq - jp) > 1e-3 * std::max(jq, jp)) {
      r.fail(fmt("solved objectives differ: %.8g vs %.8g", jq, jp));
    }
  }

  // When the rank-1 service value dominates, the eta = 0 optimum caches the
  // locally most popular files at every BS.
  {
    auto table = make_uniform_table(desk.subs, {1e9, 1e6, 1e3}, 1.0);
    SolveOptions opt;
    opt.tol = 1e-3;
    opt.max_iter = 150;
    auto pol = solve_recorded("c3_ranked_eta0", het, desk.subs, table, 3, 0.0,
                              opt);
    auto lp = policy_local_pop(het, 3);
    for (int b = 0; b < 7; ++b) {
      for (int f = 0; f < 30; ++f) {
        bool solved = pol.c[f][b] >= 0.5;
        bool top = lp.c[f][b] >= 0.5;
        if (solved != top) {
          r.fail(fmt("BS %d file %d: c=%.3f but local-pop pick=%d", b, f,
                     pol.c[f][b], top ? 1 : 0));
        }
      }
    }
  }

  // Full statistical homogeneity: both objectives meet at the same value.
  {
    Matrix Qp(10, desk.p);
    Matrix Au(10, std::vector<double>(7, 1.0 / 7.0));
    DemandModel uni = assemble_demand(std::vector<double>(10, 0.1), Qp, Au);
    SolveOptions opt;
    opt.tol = 1e-5;
    opt.max_iter = 300;
    auto pol0 =
        solve_recorded("c3_homog_eta0", uni, desk.subs, desk.table, 3, 0.0, opt);
    auto pol1 =
        solve_recorded("c3_homog_eta1", uni, desk.subs, desk.table, 3, 1.0, opt);
    double j0 = p0_objective(uni, desk.subs, desk.table, pol0, 0.0);
    double j1 = p0_objective(uni, desk.subs, desk.table, pol1, 1.0);
    if (std::abs(j0 - j1) > 1e-6 * std::max(j0, j1)) {
      r.fail(fmt("homogeneous optima differ: %.8g vs %.8g", j0, j1));
    }
  }

  if (total.s() > 120.0) r.fail(fmt("took %.0f s, budget 120", total.s()));
  if (r.ok) r.note(fmt("all four reductions hold, %.0f s", total.s()));
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 4: the solver matches exact oracles on 50 random tiny instances.

CheckResult criterion4() {
  CheckResult r;
  Timer total;
  SolveOptions opt;
  opt.tol = 1e-6;
  opt.max_iter = 400;
  double worst0 = 0.0;
  double worst1 = 0.0;
  for (int i = 0; i < 50; ++i) {
    Pcg32 rng(20240815 + static_cast<std::uint64_t>(i), 3);
    int nf = 2 + static_cast<int>(rng.uniform() * 3.0);
    int nb = 1 + static_cast<int>(rng.uniform() * 2.0);
    int nu = 2 + static_cast<int>(rng.uniform() * 2.0);
    nf = std::min(nf, 4);
    nb = std::min(nb, 2);
    nu = std::min(nu, 3);
    double t1 = 2e6 + 2e6 * rng.uniform();
    double tb = (0.2 + 0.6 * rng.uniform()) * t1;

    auto subs = flat_partition(nb);
    auto table = make_uniform_table(subs, {t1}, tb);
    Matrix Q(nu), A(nu);
    for (int u = 0; u < nu; ++u) {
      Q[u] = random_pmf(nf, rng);
      A[u] = nb == 1 ? std::vector<double>{1.0} : random_pmf(nb, rng);
    }
    DemandModel d = assemble_demand(random_pmf(nu, rng), Q, A);

    auto pol0 = solve_recorded(fmt("tiny%02d_eta0", i), d, subs, table, 1, 0.0,
                               opt);
    auto oracle0 = brute_force_policy(d, subs, table, 1, 0.0);
    double j = p0_objective(d, subs, table, pol0, 0.0);
    double jo = p0_objective(d, subs, table, oracle0, 0.0);
    double gap0 = std::abs(j / jo - 1.0);
    worst0 = std::max(worst0, gap0);
    if (gap0 > 1e-3) {
      r.fail(fmt("instance %d eta0: %.8g vs oracle %.8g", i, j, jo));
    }

    auto pol1 = solve_recorded(fmt("tiny%02d_eta1", i), d, subs, table, 1, 1.0,
                               opt);
    double got = min_utility(d, subs, table, pol1).value;
    double want = lp_maxmin_value(d, t1, tb, 1);
    double gap1 = std::abs(got / want - 1.0);
    worst1 = std::max(worst1, gap1);
    if (gap1 > 1e-2) {
      r.fail(fmt("instance %d eta1: min %.8g vs oracle %.8g", i, got, want));
    }
  }
  if (total.s() > 300.0) r.fail(fmt("took %.0f s, budget 300", total.s()));
  if (r.ok) {
    r.note(fmt("50 instances, worst eta0 gap %.2g, worst eta1 gap %.2g, %.0f s",
               worst0, worst1, total.s()));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 5: preference synthesis keeps its algebraic guarantees and the
// similarity knob is monotone.

CheckResult criterion5() {
  CheckResult r;
  Timer total;
  auto p = mzipf_pmf(30, 0.0, 0.6);
  auto v = mzipf_pmf(10, 0.0, 0.4);

  for (double theta : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
      Matrix Q = synthesize_preferences(p, v, theta, seed);
      for (size_t f = 0; f < p.size(); ++f) {
        double mix = 0.0;
        for (size_t u = 0; u < Q.size(); ++u) mix += v[u] * Q[u][f];
        if (std::abs(mix - p[f]) > 1e-9) {
          r.fail(fmt("mixture off by %.2g at theta %.2f", mix - p[f], theta));
        }
      }
      for (const auto& row : Q) {
        double sum = 0.0;
        for (double q : row) {
          sum += q;
          if (q < -1e-15) r.fail("negative preference entry");
        }
        if (std::abs(sum - 1.0) > 1e-12) {
          r.fail(fmt("row sum %.15f at theta %.2f", sum, theta));
        }
      }
      if (theta == 1.0) {
        for (const auto& row : Q) {
          for (size_t f = 0; f < p.size(); ++f) {
            if (std::abs(row[f] - p[f]) > 1e-12) {
              r.fail("theta=1 row differs from popularity");
            }
          }
        }
      }
    }
  }

  std::vector<double> mean_sim;
  for (double theta : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}) {
    double acc = 0.0;
    for (int s = 0; s < 20; ++s) {
      acc += average_similarity(synthesize_preferences(p, v, theta, 500 + s));
    }
    mean_sim.push_back(acc / 20.0);
  }
  for (size_t i = 0; i + 1 < mean_sim.size(); ++i) {
    if (mean_sim[i + 1] < mean_sim[i] - 0.01) {
      r.fail(fmt("similarity drops from %.3f to %.3f", mean_sim[i],
                 mean_sim[i + 1]));
    }
  }
  if (total.s() > 120.0) r.fail(fmt("took %.0f s, budget 120", total.s()));
  if (r.ok) {
    r.note(fmt("mixture exact, similarity %.2f -> %.2f, %.1f s", mean_sim.front(),
               mean_sim.back(), total.s()));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 6: rank-law fitting recovers known parameters.

CheckResult criterion6() {
  CheckResult r;
  Timer total;
  {
    auto fit = fit_mzipf(mzipf_pmf(100, 2.0, 1.2));
    if (std::abs(fit.beta - 2.0) > 1e-3 || std::abs(fit.delta - 1.2) > 1e-3) {
      r.fail(fmt("noiseless fit gave beta %.5f delta %.5f", fit.beta,
                 fit.delta));
    }
  }
  struct Pair {
    double beta, delta;
    int n;  // rank window wide enough to resolve the plateau
  };
  for (const Pair& c : {Pair{500.0, 2.68, 500}, Pair{2.89, 0.42, 50}}) {
    auto fit = fit_mzipf(mzipf_pmf(c.n, c.beta, c.delta));
    if (std::abs(fit.delta / c.delta - 1.0) > 0.02) {
      r.fail(fmt("(beta=%.2f, delta=%.2f) round-trips to delta %.4f", c.beta,
                 c.delta, fit.delta));
    }
  }
  if (total.s() > 30.0) r.fail(fmt("took %.1f s, budget 30", total.s()));
  if (r.ok) r.note(fmt("all fits within tolerance, %.1f s", total.s()));
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 7: qualitative trends at desk scale, majority over 5 seeds.

struct SeedTrends {
  bool a = false, b = false, c = false, d = false;
};

CheckResult criterion7() {
  CheckResult r;
  Timer total;
  auto desk = build_desk(FrequencyMode::orthogonal, Metric::rate);
  RadioConfig radio;

  double theta02 = calibrate_theta(desk.p, desk.v, 0.2, 8, 501);
  double theta05 = calibrate_theta(desk.p, desk.v, 0.5, 8, 501);
  double theta08 = calibrate_theta(desk.p, desk.v, 0.8, 8, 501);

  SolveOptions fast0;
  fast0.tol = 1e-3;
  fast0.max_iter = 150;
  SolveOptions fast1 = fast0;
  SolveOptions pop1 = fast0;
  pop1.max_iter = 60;

  const std::uint64_t seeds[5] = {101, 102, 103, 104, 105};
  std::vector<SeedTrends> ok(5);
  for (int s = 0; s < 5; ++s) {
    std::uint64_t seed = seeds[s];
    Matrix A1 = synthesize_locations(10, 7, 1.0, seed);

    // (a) the network-rate edge over the popularity-only variant shrinks as
    // preferences align.
    double theta_grid[3] = {theta02, theta05, theta08};
    std::vector<double> adv(3);
    DemandModel d_sim02;
    CachingPolicy pop_sim02;
    for (int gi = 0; gi < 3; ++gi) {
      DemandModel d = assemble_demand(
          desk.v, synthesize_preferences(desk.p, desk.v, theta_grid[gi], seed),
          A1);
      auto p1 = solve_recorded(fmt("t7_s%llu_sim%d_p1",
                                   static_cast<unsigned long long>(seed), gi),
                               d, desk.subs, desk.table, 3, 0.0, fast0);
      if (gi == 0) d_sim02 = d;
      if (gi == 1) {
        // The popularity variant sees the same locations at every grid
        // point, so one solve covers the whole axis.
        pop_sim02 = solve_recorded(
            fmt("t7_s%llu_pop1", static_cast<unsigned long long>(seed)),
            popularity_demand(d), desk.subs, desk.table, 3, 0.0, fast0);
      }
      adv[gi] = network_utility(d, desk.subs, desk.table, p1);
    }
    for (int gi = 0; gi < 3; ++gi) {
      DemandModel d = assemble_demand(
          desk.v, synthesize_preferences(desk.p, desk.v, theta_grid[gi], seed),
          A1);
      adv[gi] -= network_utility(d, desk.subs, desk.table, pop_sim02);
    }
    double slack_a =
        0.01 * std::max({std::abs(adv[0]), std::abs(adv[1]), std::abs(adv[2])});
    ok[s].a = adv[0] >= adv[1] - slack_a && adv[1] >= adv[2] - slack_a;

    // (b) at low similarity the fairness policy's worst user beats every
    // baseline's worst user.
    {
      auto p2 = solve_recorded(
          fmt("t7_s%llu_sim0_p2", static_cast<unsigned long long>(seed)),
          d_sim02, desk.subs, desk.table, 3, 1.0, fast1);
      auto p2pop = solve_recorded(
          fmt("t7_s%llu_pop2", static_cast<unsigned long long>(seed)),
          popularity_demand(d_sim02), desk.subs, desk.table, 3, 1.0, pop1);
      auto positions = sample_user_positions(d_sim02, desk.layout, seed);
      auto femto =
          policy_femtocaching(d_sim02, desk.layout, desk.plan, radio,
                              desk.table, positions, PreferenceMode::popularity,
                              3);
      auto femto_up =
          policy_femtocaching(d_sim02, desk.layout, desk.plan, radio,
                              desk.table, positions,
                              PreferenceMode::individual, 3);
      auto local = policy_local_pop(d_sim02, 3);
      double best = min_utility(d_sim02, desk.subs, desk.table, p2).value;
      ok[s].b = true;
      for (const auto& base : {local, femto, femto_up, pop_sim02, p2pop}) {
        double mb = min_utility(d_sim02, desk.subs, desk.table, base).value;
        if (best < mb - 1e-3 * best) ok[s].b = false;
      }
    }

    // (c) across location skew, popularity-only policies stay flat while the
    // preference-aware ones gain; (d) the eta sweep traces a monotone
    // network-vs-fairness frontier at the default skew.
    {
      std::vector<double> net_p1(3), min_p2(3);
      std::vector<double> net_pop(3), min_pop(3), net_fem(3), min_fem(3);
      DemandModel d_mid;
      CachingPolicy p1_mid, p2_mid;
      Matrix Q05 = synthesize_preferences(desk.p, desk.v, theta05, seed);
      for (int ai = 0; ai < 3; ++ai) {
        double delta_a = static_cast<double>(ai);
        DemandModel d = assemble_demand(
            desk.v, Q05, synthesize_locations(10, 7, delta_a, seed));
        auto p1 = solve_recorded(
            fmt("t7_s%llu_da%d_p1", static_cast<unsigned long long>(seed), ai),
            d, desk.subs, desk.table, 3, 0.0, fast0);
        auto p2 = solve_recorded(
            fmt("t7_s%llu_da%d_p2", static_cast<unsigned long long>(seed), ai),
            d, desk.subs, desk.table, 3, 1.0, fast1);
        auto pop = solve_recorded(
            fmt("t7_s%llu_da%d_pop1", static_cast<unsigned long long>(seed),
                ai),
            popularity_demand(d), desk.subs, desk.table, 3, 0.0, fast0);
        auto positions = sample_user_positions(d, desk.layout, seed + ai);
        auto femto = policy_femtocaching(d, desk.layout, desk.plan, radio,
                                         desk.table, positions,
                                         PreferenceMode::popularity, 3);
        net_p1[ai] = network_utility(d, desk.subs, desk.table, p1);
        min_p2[ai] = min_utility(d, desk.subs, desk.table, p2).value;
        net_pop[ai] = network_utility(d, desk.subs, desk.table, pop);
        min_pop[ai] = min_utility(d, desk.subs, desk.table, pop).value;
        net_fem[ai] = network_utility(d, desk.subs, desk.table, femto);
        min_fem[ai] = min_utility(d, desk.subs, desk.table, femto).value;
        if (ai == 1) {
          d_mid = d;
          p1_mid = p1;
          p2_mid = p2;
        }
      }
      bool flat = spread(net_pop) < 0.05 && spread(min_pop) < 0.05 &&
                  spread(net_fem) < 0.05 && spread(min_fem) < 0.05;
      bool up1 = net_p1[1] > net_p1[0] * (1.0 + 1e-4) &&
                 net_p1[2] > net_p1[1] * (1.0 + 1e-4);
      bool up2 = min_p2[1] > min_p2[0] * (1.0 + 1e-4) &&
                 min_p2[2] > min_p2[1] * (1.0 + 1e-4);
      ok[s].c = flat && up1 && up2;

      std::vector<double> net_eta(4), min_eta(4);
      net_eta[0] = network_utility(d_mid, desk.subs, desk.table, p1_mid);
      min_eta[0] = min_utility(d_mid, desk.subs, desk.table, p1_mid).value;
      net_eta[3] = network_utility(d_mid, desk.subs, desk.table, p2_mid);
      min_eta[3] = min_utility(d_mid, desk.subs, desk.table, p2_mid).value;
      double etas[2] = {1.0 / 3.0, 2.0 / 3.0};
      for (int ei = 0; ei < 2; ++ei) {
        auto pol = solve_recorded(
            fmt("t7_s%llu_eta%d", static_cast<unsigned long long>(seed),
                ei + 1),
            d_mid, desk.subs, desk.table, 3, etas[ei], fast1);
        net_eta[ei + 1] = network_utility(d_mid, desk.subs, desk.table, pol);
        min_eta[ei + 1] = min_utility(d_mid, desk.subs, desk.table, pol).value;
      }
      ok[s].d = true;
      for (int ei = 0; ei < 3; ++ei) {
        if (net_eta[ei + 1] > net_eta[ei] * (1.0 + 1e-3)) ok[s].d = false;
        if (min_eta[ei + 1] < min_eta[ei] * (1.0 - 1e-3)) ok[s].d = false;
      }
    }
  }

  int na = 0, nb = 0, nc = 0, nd = 0;
  for (const auto& t : ok) {
    na += t.a ? 1 : 0;
    nb += t.b ? 1 : 0;
    nc += t.c ? 1 : 0;
    nd += t.d ? 1 : 0;
  }
  if (na < 3) r.fail(fmt("(a) advantage nonincreasing on %d of 5 seeds", na));
  if (nb < 3) r.fail(fmt("(b) fairness lead at low sim on %d of 5 seeds", nb));
  if (nc < 3) r.fail(fmt("(c) locality response on %d of 5 seeds", nc));
  if (nd < 3) r.fail(fmt("(d) monotone frontier on %d of 5 seeds", nd));
  if (total.s() > 1800.0) r.fail(fmt("took %.0f s, budget 1800", total.s()));
  if (r.ok) {
    r.note(fmt("seeds passing: a=%d b=%d c=%d d=%d of 5, %.0f s", na, nb, nc,
               nd, total.s()));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 8: every recorded trace has a nonincreasing objective, and the
// step norm reaches 1e-4 within 50 outer iterations.

CheckResult criterion8() {
  CheckResult r;
  SolveOptions toy_opt;
  toy_opt.tol = 1e-6;
  toy_opt.max_iter = 400;
  auto subs1 = single_cell_partition();
  auto table1 = make_uniform_table(subs1, {3e6}, 1e6);
  solve_recorded("c8_toy1_eta0", toy_demand(true, 1), subs1, table1, 1, 0.0,
                 toy_opt);
  solve_recorded("c8_toy1_eta1", toy_demand(true, 1), subs1, table1, 1, 1.0,
                 toy_opt);
  auto subs2 = two_cell_partition();
  auto table2 = make_uniform_table(subs2, {3e6, 2e6}, 1e6);
  solve_recorded("c8_toy2_eta0", toy_demand(true, 2), subs2, table2, 1, 0.0,
                 toy_opt);

  auto desk = build_desk(FrequencyMode::orthogonal, Metric::rate);
  DemandModel het =
      assemble_demand(desk.v, synthesize_preferences(desk.p, desk.v, 0.5, 31),
                      synthesize_locations(10, 7, 1.0, 31));
  SolveOptions desk_opt;
  desk_opt.tol = 1e-4;
  desk_opt.max_iter = 250;
  solve_recorded("c8_desk_eta0", het, desk.subs, desk.table, 3, 0.0, desk_opt);
  solve_recorded("c8_desk_eta1", het, desk.subs, desk.table, 3, 1.0, desk_opt);

  int non_monotone = 0;
  std::vector<std::string> misses;
  for (const auto& rec : g_solves) {
    if (!rec.trace.objective_monotone) {
      ++non_monotone;
      r.fail(fmt("objective not monotone on %s", rec.label.c_str()));
    }
    int hit = -1;
    const auto& rows = rec.trace.rows;
    for (size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].step_norm <= 1e-4) {
        hit = static_cast<int>(i) + 1;
        break;
      }
    }
    if (hit < 0 || hit > 50) {
      misses.push_back(
          hit < 0 ? fmt("%s@never(%d)", rec.label.c_str(),
                        static_cast<int>(rows.size()))
                  : fmt("%s@%d", rec.label.c_str(), hit));
    }
  }
  if (!misses.empty()) {
    std::string head;
    for (size_t i = 0; i < misses.size() && i < 4; ++i) {
      if (!head.empty()) head += ", ";
      head += misses[i];
    }
    r.fail(fmt("step<=1e-4 within 50 iterations missed on %zu of %zu traces "
               "(%s%s)",
               misses.size(), g_solves.size(), head.c_str(),
               misses.size() > 4 ? ", ..." : ""));
  }
  if (r.ok) {
    r.note(fmt("%zu traces monotone and within the iteration bound",
               g_solves.size()));
  }
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    }
  }
  struct Entry {
    int id;
    CheckResult (*fn)();
  };
  const Entry entries[] = {{1, criterion1}, {2, criterion2}, {3, criterion3},
                           {4, criterion4}, {5, criterion5}, {6, criterion6},
                           {7, criterion7}, {8, criterion8}};
  bool all_ok = true;
  for (const Entry& e : entries) {
    if (only != 0 && e.id != only) continue;
    CheckResult res;
    try {
      res = e.fn();
    } catch (const std::exception& ex) {
      res.ok = false;
      res.reason = fmt("exception: %s", ex.what());
    }
    std::string line = res.reason;
    if (line.size() > 360) line = line.substr(0, 357) + "...";
    std::printf("criterion %d: %s%s%s%s\n", e.id, res.ok ? "PASS" : "FAIL",
                line.empty() ? "" : " (", line.c_str(), line.empty() ? "" : ")");
    std::fflush(stdout);
    all_ok = all_ok && res.ok;
  }
  return all_ok ? 0 : 1;
}
