#include "edgecache/utility.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "edgecache/numerics.hpp"
#include "edgecache/rng.hpp"

namespace edgecache {

namespace {

constexpr double kLn2 = 0.6931471805599453;

std::atomic<long> g_jitter_events{0};

// Effective path-gain exponents r^alpha for the serving BS and its
// co-channel interferers, near-ties jittered so the partial fractions stay
// well conditioned.
struct LinkSet {
  double serving = 0.0;          // r_s^alpha
  std::vector<double> interf;    // r_b^alpha, b in Phi_s \ {s}
};

LinkSet link_set(const NetworkLayout& layout, const FrequencyPlan& plan,
                 double alpha, int serving, const Vec2& x) {
  // Floor of 1 mm keeps the log-rate integrand finite when a quadrature
  // node lands exactly on a BS position (the singularity is integrable).
  constexpr double kMinDistance = 1e-3;
  LinkSet ls;
  ls.serving =
      std::pow(std::max(distance(x, layout.bs[serving]), kMinDistance), alpha);
  for (int b : plan.cochannel[serving]) {
    if (b == serving) continue;
    ls.interf.push_back(
        std::pow(std::max(distance(x, layout.bs[b]), kMinDistance), alpha));
  }
  // Jitter distances that coincide to within 1e-9 relative (symmetry points
  // hit exact ties); 1e-6 relative separation is far below quadrature error.
  std::vector<double> all;
  all.push_back(ls.serving);
  for (double v : ls.interf) all.push_back(v);
  for (std::size_t i = 0; i < all.size(); ++i) {
    for (std::size_t j = i + 1; j < all.size(); ++j) {
      if (std::fabs(all[i] - all[j]) <= 1e-9 * std::max(all[i], all[j])) {
        all[j] *= 1.0 + 1e-6 * static_cast<double>(j);
        g_jitter_events.fetch_add(1, std::memory_order_relaxed);
      }
    }
  }
  ls.serving = all[0];
  for (std::size_t j = 1; j < all.size(); ++j) ls.interf[j - 1] = all[j];
  return ls;
}

double success_from_links(const LinkSet& ls, double noise_over_p,
                          double gamma0) {
  double g = std::exp(-gamma0 * ls.serving * noise_over_p);
  for (double rb : ls.interf) {
    g /= 1.0 + gamma0 * ls.serving / rb;
  }
  return g;
}

// -e^y Ei(-y) > 0 for y > 0; the ln(noise) constants of the two
// log-expectations cancel since each partial-fraction weight set sums to 1.
double gfun(double y) { return exp_e1_scaled(y); }

double elog2_one_plus_sinr(const LinkSet& ls, double noise_over_p) {
  std::vector<double> lam;
  lam.push_back(ls.serving);
  for (double v : ls.interf) lam.push_back(v);
  std::size_t n = lam.size();

  double total = 0.0;
  // E[log(S + I + n)] part: weights over the full set.
  for (std::size_t b = 0; b < n; ++b) {
    double w = 1.0;
    for (std::size_t o = 0; o < n; ++o) {
      if (o != b) w *= lam[o] / (lam[o] - lam[b]);
    }
    total += w * gfun(lam[b] * noise_over_p);
  }
  // E[log(I + n)] part: weights over interferers only.
  for (std::size_t b = 1; b < n; ++b) {
    double w = 1.0;
    for (std::size_t o = 1; o < n; ++o) {
      if (o != b) w *= lam[o] / (lam[o] - lam[b]);
    }
    total -= w * gfun(lam[b] * noise_over_p);
  }
  return total / kLn2;
}

}  // namespace

double RadioConfig::noise_power_dbm() const {
  return noise_psd_dbm_hz + 10.0 * std::log10(bandwidth_hz);
}

double RadioConfig::noise_over_p() const {
  return std::pow(
      10.0, (noise_power_dbm() - tx_power_dbm + pathloss_const_db) / 10.0);
}

long utility_jitter_events() {
  return g_jitter_events.load(std::memory_order_relaxed);
}

long utility_jitter_reset() {
  return g_jitter_events.exchange(0, std::memory_order_relaxed);
}

LinkGains link_gains(const NetworkLayout& layout, const FrequencyPlan& plan,
                     const RadioConfig& radio, int serving, const Vec2& x) {
  constexpr double kMinDistance = 1e-3;
  double alpha = radio.alpha();
  LinkGains lg;
  lg.noise_over_p = radio.noise_over_p();
  lg.serving =
      std::pow(std::max(distance(x, layout.bs[serving]), kMinDistance), alpha);
  for (int b : plan.cochannel[serving]) {
    if (b == serving) continue;
    lg.interferers.push_back(
        std::pow(std::max(distance(x, layout.bs[b]), kMinDistance), alpha));
  }
  return lg;
}

double success_probability_point(const NetworkLayout& layout,
                                 const FrequencyPlan& plan,
                                 const RadioConfig& radio, int serving,
                                 const Vec2& x, double gamma0) {
  if (gamma0 < 0.0) {
    throw std::invalid_argument("success_probability_point: gamma0 < 0");
  }
  LinkSet ls = link_set(layout, plan, radio.alpha(), serving, x);
  return success_from_links(ls, radio.noise_over_p(), gamma0);
}

double rate_point(const NetworkLayout& layout, const FrequencyPlan& plan,
                  const RadioConfig& radio, int serving, const Vec2& x) {
  LinkSet ls = link_set(layout, plan, radio.alpha(), serving, x);
  return radio.bandwidth_hz * elog2_one_plus_sinr(ls, radio.noise_over_p());
}

double backhaul_rate_point(const NetworkLayout& layout,
                           const FrequencyPlan& plan, const RadioConfig& radio,
                           int local_bs, const Vec2& x) {
  LinkSet ls = link_set(layout, plan, radio.alpha(), local_bs, x);
  double n = radio.noise_over_p();
  double w = radio.bandwidth_hz;
  double c = radio.backhaul_rate_bps;
  auto tail = [&](double t) {
    double g0 = std::exp2(t / w) - 1.0;
    return success_from_links(ls, n, g0);
  };
  QuadResult q = integrate_adaptive(tail, 0.0, c, std::max(1e-6 * c, 1e-9));
  return q.value;
}

namespace {

struct PointMetric {
  const NetworkLayout* layout;
  const FrequencyPlan* plan;
  const RadioConfig* radio;
  Metric metric;
  double gamma0;

  // k in 1..K serves from order[k-1]; k = K+1 is the backhaul fallback from
  // the local BS (0 for the success metric: backhaul hits never count).
  double eval(const std::vector<int>& order, int k, const Vec2& x) const {
    int kk = static_cast<int>(order.size());
    if (k <= kk) {
      if (metric == Metric::success) {
        return success_probability_point(*layout, *plan, *radio, order[k - 1],
                                         x, gamma0);
      }
      return rate_point(*layout, *plan, *radio, order[k - 1], x);
    }
    if (metric == Metric::success) return 0.0;
    return backhaul_rate_point(*layout, *plan, *radio, order[0], x);
  }
};

// Congruence key: serving/interferer geometry expressed in the canonical
// triangle frame, rounded. Sub-regions with equal keys share one integral.
std::string congruence_key(const NetworkLayout& layout,
                           const FrequencyPlan& plan, const Subregion& r,
                           int serving, bool backhaul) {
  auto canon = [&](const Vec2& p) {
    double dx = p[0] - r.origin[0];
    double dy = p[1] - r.origin[1];
    // inverse of the rigid map: transpose
    double cx = r.rot[0] * dx + r.rot[2] * dy;
    double cy = r.rot[1] * dx + r.rot[3] * dy;
    return std::pair<long long, long long>(std::llround(cx * 1e7),
                                           std::llround(cy * 1e7));
  };
  std::vector<std::pair<long long, long long>> pts;
  pts.push_back(canon(layout.bs[serving]));
  std::vector<std::pair<long long, long long>> ints;
  for (int b : plan.cochannel[serving]) {
    if (b != serving) ints.push_back(canon(layout.bs[b]));
  }
  std::sort(ints.begin(), ints.end());
  std::ostringstream os;
  os << (backhaul ? "B" : "S");
  for (const auto& pr : pts) os << ";" << pr.first << "," << pr.second;
  os << "|";
  for (const auto& pr : ints) os << ";" << pr.first << "," << pr.second;
  return os.str();
}

}  // namespace

UtilityTable compute_utility_tables(const NetworkLayout& layout,
                                    const SubregionTable& subregions,
                                    const FrequencyPlan& plan,
                                    const RadioConfig& radio, Metric metric,
                                    double gamma0, const TableOptions& opt) {
  if (metric == Metric::success && gamma0 < 0.0) {
    throw std::invalid_argument("compute_utility_tables: gamma0 < 0");
  }
  int nb = layout.n_bs();
  int K = subregions.K;
  UtilityTable table;
  table.metric = metric;
  table.gamma0 = gamma0;
  table.K = K;
  table.region_offset.resize(nb + 1, 0);
  for (int i = 0; i < nb; ++i) {
    table.region_offset[i + 1] =
        table.region_offset[i] +
        static_cast<int>(subregions.by_cell[i].size());
  }
  int total = table.region_offset[nb];

  // Distinct (bandwidth, backhaul) pairs become groups.
  std::vector<std::pair<double, double>> groups{{radio.bandwidth_hz,
                                                 radio.backhaul_rate_bps}};
  if (!opt.per_user_bandwidth.empty() || !opt.per_user_backhaul.empty()) {
    std::size_t nu = std::max(opt.per_user_bandwidth.size(),
                              opt.per_user_backhaul.size());
    if ((!opt.per_user_bandwidth.empty() &&
         opt.per_user_bandwidth.size() != nu) ||
        (!opt.per_user_backhaul.empty() &&
         opt.per_user_backhaul.size() != nu)) {
      throw std::invalid_argument(
          "compute_utility_tables: per-user vectors disagree in length");
    }
    groups.clear();
    table.user_group.resize(nu);
    for (std::size_t u = 0; u < nu; ++u) {
      double w = opt.per_user_bandwidth.empty() ? radio.bandwidth_hz
                                                : opt.per_user_bandwidth[u];
      double c = opt.per_user_backhaul.empty() ? radio.backhaul_rate_bps
                                               : opt.per_user_backhaul[u];
      auto it = std::find(groups.begin(), groups.end(), std::make_pair(w, c));
      if (it == groups.end()) {
        groups.emplace_back(w, c);
        it = groups.end() - 1;
      }
      table.user_group[u] = static_cast<int>(it - groups.begin());
    }
  }
  table.n_groups = static_cast<int>(groups.size());
  table.values.assign(static_cast<std::size_t>(table.n_groups) * total *
                          (K + 1),
                      0.0);
  table.errors.assign(table.values.size(), 0.0);

  bool sampler_based = false;
  for (const auto& cell : subregions.by_cell) {
    for (const auto& r : cell) {
      if (!r.has_transform) sampler_based = true;
    }
  }
  // Hexagonal K = 1 stores whole cells; their averages still come from the
  // twelve-triangle split, so treat that as transform-based.
  bool hex_k1 = layout.kind == LayoutKind::hexagonal && K == 1;

  for (int g = 0; g < table.n_groups; ++g) {
    RadioConfig rc = radio;
    rc.bandwidth_hz = groups[g].first;
    rc.backhaul_rate_bps = groups[g].second;
    PointMetric pm{&layout, &plan, &rc, metric, gamma0};

    auto slot = [&](int region, int k) {
      return (static_cast<std::size_t>(g) * total + region) * (K + 1) +
             (k - 1);
    };

    if (!sampler_based || hex_k1) {
      std::map<std::string, std::pair<double, double>> cache;
      double d = layout.cell_radius_m;
      double tri_area = d * d / (2.0 * std::sqrt(3.0));
      for (int i = 0; i < nb; ++i) {
        for (const auto& r : subregions.by_cell[i]) {
          for (int k = 1; k <= K + 1; ++k) {
            int serving = k <= K ? r.order[k - 1] : r.order[0];
            double scale = metric == Metric::success && k == K + 1 ? 0.0 : 1.0;
            double acc_val = 0.0, acc_err = 0.0;
            if (scale != 0.0) {
              int tris = hex_k1 ? 12 : 1;
              for (int t = 0; t < tris; ++t) {
                Vec2 origin = r.origin;
                std::array<double, 4> rot = r.rot;
                if (hex_k1) hex_triangle_transform(layout, i, t, origin, rot);
                Subregion rr = r;
                rr.origin = origin;
                rr.rot = rot;
                rr.has_transform = true;
                std::string key =
                    congruence_key(layout, plan, rr, serving, k == K + 1);
                auto it = cache.find(key);
                if (it == cache.end()) {
                  auto f = [&](double x1, double x2) {
                    Vec2 wpt{origin[0] + rot[0] * x1 + rot[1] * x2,
                             origin[1] + rot[2] * x1 + rot[3] * x2};
                    return pm.eval(r.order, k, wpt);
                  };
                  // entry magnitudes: success ~1, rate ~ W; scale abs tol
                  double mag = metric == Metric::success
                                   ? 1.0
                                   : (k == K + 1 ? rc.backhaul_rate_bps
                                                 : rc.bandwidth_hz * 10.0);
                  QuadResult q = integrate_triangle(
                      f, d, std::sqrt(3.0), opt.quad_rel_tol * mag * tri_area);
                  if (!q.converged) table.quadrature_converged = false;
                  it = cache
                           .emplace(key, std::make_pair(q.value / tri_area,
                                                        q.error_estimate /
                                                            tri_area))
                           .first;
                }
                acc_val += it->second.first;
                acc_err += it->second.second;
              }
              acc_val /= hex_k1 ? 12.0 : 1.0;
              acc_err /= hex_k1 ? 12.0 : 1.0;
            }
            table.values[slot(table.flat_index(i, r.index_in_cell), k)] =
                acc_val;
            table.errors[slot(table.flat_index(i, r.index_in_cell), k)] =
                acc_err;
          }
        }
      }
    } else {
      // Sampler-based layouts: one streaming Monte Carlo pass classifies
      // points and accumulates every rank's integrand until each sub-region
      // reaches the requested budget.
      struct Acc {
        std::vector<double> sum, sumsq;
        long n = 0;
      };
      std::vector<Acc> acc(total);
      for (auto& a : acc) {
        a.sum.assign(K + 1, 0.0);
        a.sumsq.assign(K + 1, 0.0);
      }
      // region lookup: per cell, sorted order lists
      std::vector<std::vector<std::pair<std::vector<int>, int>>> lookup(nb);
      for (int i = 0; i < nb; ++i) {
        for (const auto& r : subregions.by_cell[i]) {
          lookup[i].emplace_back(r.order,
                                 table.flat_index(i, r.index_in_cell));
        }
        std::sort(lookup[i].begin(), lookup[i].end());
      }
      Pcg32 rng = rng_for(opt.seed, 0x7ab1eu, static_cast<std::uint64_t>(g));
      const auto& bx = layout.box;
      long needed = total;
      long guard = opt.mc_points * 1000;
      while (needed > 0 && guard-- > 0) {
        Vec2 p{rng.uniform(bx[0], bx[2]), rng.uniform(bx[1], bx[3])};
        if (layout.kind == LayoutKind::hexagonal &&
            !point_in_region(layout, p)) {
          continue;
        }
        auto order = knn_order(layout, p, K);
        int cell = order[0];
        auto it = std::lower_bound(
            lookup[cell].begin(), lookup[cell].end(), order,
            [](const auto& a, const auto& o) { return a.first < o; });
        if (it == lookup[cell].end() || it->first != order) continue;
        Acc& a = acc[it->second];
        if (a.n >= opt.mc_points) continue;
        for (int k = 1; k <= K + 1; ++k) {
          double val = pm.eval(order, k, p);
          a.sum[k - 1] += val;
          a.sumsq[k - 1] += val * val;
        }
        ++a.n;
        if (a.n == opt.mc_points) --needed;
      }
      for (int region = 0; region < total; ++region) {
        const Acc& a = acc[region];
        if (a.n == 0) {
          table.quadrature_converged = false;
          continue;
        }
        if (a.n < opt.mc_points) table.quadrature_converged = false;
        for (int k = 1; k <= K + 1; ++k) {
          double mean = a.sum[k - 1] / a.n;
          double var =
              std::max(0.0, a.sumsq[k - 1] / a.n - mean * mean);
          table.values[slot(region, k)] = mean;
          table.errors[slot(region, k)] = std::sqrt(var / a.n);
        }
      }
    }
  }
  return table;
}

UtilityTable make_uniform_table(const SubregionTable& subregions,
                                const std::vector<double>& per_k,
                                double backhaul) {
  if (static_cast<int>(per_k.size()) != subregions.K) {
    throw std::invalid_argument("make_uniform_table: need K values");
  }
  UtilityTable table;
  table.metric = Metric::rate;
  table.K = subregions.K;
  int nb = static_cast<int>(subregions.by_cell.size());
  table.region_offset.resize(nb + 1, 0);
  for (int i = 0; i < nb; ++i) {
    table.region_offset[i + 1] =
        table.region_offset[i] +
        static_cast<int>(subregions.by_cell[i].size());
  }
  int total = table.region_offset[nb];
  table.values.resize(static_cast<std::size_t>(total) * (table.K + 1));
  table.errors.assign(table.values.size(), 0.0);
  for (int r = 0; r < total; ++r) {
    for (int k = 1; k <= table.K; ++k) {
      table.values[static_cast<std::size_t>(r) * (table.K + 1) + k - 1] =
          per_k[k - 1];
    }
    table.values[static_cast<std::size_t>(r) * (table.K + 1) + table.K] =
        backhaul;
  }
  return table;
}

void validate_policy(const CachingPolicy& policy) {
  if (policy.c.empty()) throw std::invalid_argument("policy: empty");
  int nb = static_cast<int>(policy.c[0].size());
  for (const auto& row : policy.c) {
    if (static_cast<int>(row.size()) != nb) {
      throw std::invalid_argument("policy: ragged matrix");
    }
    for (double x : row) {
      if (!(x >= -1e-12 && x <= 1.0 + 1e-9)) {
        throw std::invalid_argument("policy: entry outside [0,1]");
      }
    }
  }
  for (int b = 0; b < nb; ++b) {
    double s = 0.0;
    for (const auto& row : policy.c) s += row[b];
    if (s > policy.n_cache + 1e-6) {
      throw std::invalid_argument("policy: cache budget violated");
    }
  }
}

namespace {

double subregion_mix(const UtilityTable& table, const CachingPolicy& policy,
                     int group, int cell, int j, const Subregion& r, int f) {
  int K = table.K;
  double stay = 1.0;
  double acc = 0.0;
  for (int k = 1; k <= K; ++k) {
    double c = policy.c[f][r.order[k - 1]];
    acc += stay * c * table.value(group, cell, j, k);
    stay *= 1.0 - c;
  }
  acc += stay * table.value(group, cell, j, K + 1);
  return acc;
}

}  // namespace

double user_utility(const DemandModel& demand, int user,
                    const SubregionTable& subregions, const UtilityTable& table,
                    const CachingPolicy& policy) {
  int group = table.group_of(user);
  int nb = static_cast<int>(subregions.by_cell.size());
  double total = 0.0;
  for (int i = 0; i < nb; ++i) {
    double a_ui = demand.A[user][i];
    if (a_ui == 0.0 || subregions.cell_area[i] <= 0.0) continue;
    for (const auto& r : subregions.by_cell[i]) {
      double w = a_ui * r.area / subregions.cell_area[i];
      double mix = 0.0;
      for (int f = 0; f < demand.n_files(); ++f) {
        double q = demand.Q[user][f];
        if (q == 0.0) continue;
        mix += q * subregion_mix(table, policy, group, i, r.index_in_cell, r,
                                 f);
      }
      total += w * mix;
    }
  }
  return total;
}

double network_utility(const DemandModel& demand,
                       const SubregionTable& subregions,
                       const UtilityTable& table,
                       const CachingPolicy& policy) {
  double total = 0.0;
  for (int u = 0; u < demand.n_users(); ++u) {
    if (demand.v[u] == 0.0) continue;
    total += demand.v[u] * user_utility(demand, u, subregions, table, policy);
  }
  return total;
}

MinUtility min_utility(const DemandModel& demand,
                       const SubregionTable& subregions,
                       const UtilityTable& table,
                       const CachingPolicy& policy) {
  MinUtility out;
  out.value = user_utility(demand, 0, subregions, table, policy);
  out.user = 0;
  for (int u = 1; u < demand.n_users(); ++u) {
    double t = user_utility(demand, u, subregions, table, policy);
    if (t < out.value) {
      out.value = t;
      out.user = u;
    }
  }
  return out;
}

}  // namespace edgecache
