#include "edgecache/demand.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "edgecache/numerics.hpp"
#include "edgecache/rng.hpp"

namespace edgecache {

namespace {

void check_pmf(const std::vector<double>& p, const char* what) {
  if (p.empty()) throw std::invalid_argument(std::string(what) + ": empty");
  double s = 0.0;
  for (double x : p) {
    if (!(x >= 0.0)) {
      throw std::invalid_argument(std::string(what) + ": negative entry");
    }
    s += x;
  }
  if (std::fabs(s - 1.0) > 1e-9) {
    throw std::invalid_argument(std::string(what) + ": does not sum to 1");
  }
}

// One user's preference row. rho is the residual popularity mass, pcur its
// normalization; both stay fixed while the row is drawn. The per-file cap
// rho_f / v_u keeps the residual nonnegative, and since the users still to
// be drawn (including u) hold sum(rho) >= v_u, the caps sum to at least 1,
// so the top-up pass below can always place the leftover mass.
void draw_preference_row(std::vector<double>& q, const std::vector<double>& rho,
                         const std::vector<double>& pcur, double v_u,
                         double theta, Pcg32& rng) {
  int nf = static_cast<int>(rho.size());
  auto cap_of = [&](int f) {
    return v_u > 0.0 ? rho[f] / v_u : std::numeric_limits<double>::infinity();
  };

  std::vector<int> pool(nf);
  std::iota(pool.begin(), pool.end(), 0);
  double sum_pool_p = std::accumulate(pcur.begin(), pcur.end(), 0.0);
  double l = 1.0;
  while (l > 1e-15 && !pool.empty()) {
    std::size_t pick = rng.below(pool.size());
    int f = pool[pick];
    double cap = std::min(cap_of(f), l);
    double lo = theta * pcur[f];
    double draw = rng.uniform(lo, lo + (1.0 - theta) * cap);
    double factor =
        sum_pool_p > 0.0 ? std::pow(l / sum_pool_p, theta) : 1.0;
    double val = std::min(draw * factor, cap);
    val = std::min(val, l);
    if (val < 0.0) val = 0.0;
    q[f] = val;
    l -= val;
    sum_pool_p -= pcur[f];
    pool[pick] = pool.back();
    pool.pop_back();
  }

  if (l > 1e-15) {
    std::vector<int> slack;
    for (int f = 0; f < nf; ++f) {
      if (q[f] < cap_of(f) - 1e-15) slack.push_back(f);
    }
    while (l > 1e-15 && !slack.empty()) {
      std::size_t pick = rng.below(slack.size());
      int f = slack[pick];
      double cap = cap_of(f);
      double next = std::min(q[f] + l, cap);
      l -= next - q[f];
      q[f] = next;
      if (next >= cap - 1e-15) {
        slack[pick] = slack.back();
        slack.pop_back();
      }
    }
  }
}

Matrix synthesize_rows(const std::vector<double>& p,
                       const std::vector<double>& v, double theta,
                       Pcg32& rng) {
  int nu = static_cast<int>(v.size());
  int nf = static_cast<int>(p.size());
  Matrix Q(nu, std::vector<double>(nf, 0.0));

  std::vector<double> rho = p;
  std::vector<double> pcur = p;
  std::vector<int> users(nu);
  std::iota(users.begin(), users.end(), 0);
  while (!users.empty()) {
    std::size_t pick = rng.below(users.size());
    int u = users[pick];
    users[pick] = users.back();
    users.pop_back();

    draw_preference_row(Q[u], rho, pcur, v[u], theta, rng);

    double total = 0.0;
    for (int f = 0; f < nf; ++f) {
      rho[f] -= v[u] * Q[u][f];
      if (rho[f] < 0.0) rho[f] = 0.0;
      total += rho[f];
    }
    if (total > 0.0) {
      for (int f = 0; f < nf; ++f) pcur[f] = rho[f] / total;
    } else {
      std::fill(pcur.begin(), pcur.end(), 0.0);
    }
  }
  return Q;
}

}  // namespace

std::vector<double> mzipf_pmf(int n, double beta, double delta) {
  if (n < 1) throw std::invalid_argument("mzipf_pmf: n must be >= 1");
  if (1.0 + beta <= 0.0) {
    throw std::invalid_argument("mzipf_pmf: need beta > -1");
  }
  if (delta < 0.0) throw std::invalid_argument("mzipf_pmf: need delta >= 0");
  std::vector<double> p(n);
  double z = 0.0;
  for (int f = 1; f <= n; ++f) {
    p[f - 1] = std::pow(static_cast<double>(f) + beta, -delta);
    z += p[f - 1];
  }
  for (double& x : p) x /= z;
  return p;
}

MZipfFit fit_mzipf(const std::vector<double>& pmf) {
  int n = static_cast<int>(pmf.size());
  if (n < 2) throw std::invalid_argument("fit_mzipf: need at least 2 entries");
  for (int i = 1; i < n; ++i) {
    if (pmf[i] > pmf[i - 1] + 1e-12) {
      throw std::invalid_argument("fit_mzipf: pmf must be sorted descending");
    }
  }
  std::vector<int> keep;
  for (int i = 0; i < n; ++i) {
    if (pmf[i] > 0.0) keep.push_back(i);
  }
  MZipfFit fit;
  fit.excluded_zeros = n - static_cast<int>(keep.size());
  if (keep.size() < 2) {
    throw std::invalid_argument("fit_mzipf: fewer than 2 positive entries");
  }

  // Residual in the log domain for a given (beta, delta).
  auto residual = [&](double beta, double delta) {
    double z = 0.0;
    for (int f = 1; f <= n; ++f) z += std::pow(f + beta, -delta);
    double lz = std::log(z);
    double r = 0.0;
    for (int i : keep) {
      double model = -delta * std::log((i + 1) + beta) - lz;
      double d = std::log(pmf[i]) - model;
      r += d * d;
    }
    return r;
  };

  auto best_delta = [&](double beta) {
    double lo = 0.0, hi = 30.0;
    double best = lo, bestv = residual(beta, lo);
    for (int i = 1; i <= 60; ++i) {
      double x = lo + (hi - lo) * i / 60.0;
      double fv = residual(beta, x);
      if (fv < bestv) {
        bestv = fv;
        best = x;
      }
    }
    double a = std::max(lo, best - (hi - lo) / 60.0);
    double b = std::min(hi, best + (hi - lo) / 60.0);
    return golden_section_min([&](double x) { return residual(beta, x); }, a,
                              b, 1e-9);
  };

  // beta spans (-1, 4n]; scan in s with beta = exp(s) - 1 to cover both the
  // near-plateau negative range and large offsets, then polish.
  double s_lo = std::log(0.01), s_hi = std::log(4.0 * n + 1.0);
  auto prof = [&](double s) {
    double beta = std::exp(s) - 1.0;
    return residual(beta, best_delta(beta));
  };
  int grid = 96;
  double best_s = s_lo, best_val = prof(s_lo);
  for (int i = 1; i <= grid; ++i) {
    double s = s_lo + (s_hi - s_lo) * i / grid;
    double fv = prof(s);
    if (fv < best_val) {
      best_val = fv;
      best_s = s;
    }
  }
  double h = (s_hi - s_lo) / grid;
  double s_star = golden_section_min(prof, std::max(s_lo, best_s - h),
                                     std::min(s_hi, best_s + h), 1e-10);
  fit.beta = std::exp(s_star) - 1.0;
  fit.delta = best_delta(fit.beta);
  return fit;
}

Matrix synthesize_preferences(const std::vector<double>& p,
                              const std::vector<double>& v, double theta,
                              std::uint64_t seed) {
  check_pmf(p, "synthesize_preferences: p");
  check_pmf(v, "synthesize_preferences: v");
  if (theta < 0.0 || theta > 1.0) {
    throw std::invalid_argument("synthesize_preferences: theta outside [0,1]");
  }
  Pcg32 rng = rng_for(seed, 0xa162u, 0);
  return synthesize_rows(p, v, theta, rng);
}

ClusteredPreferences synthesize_clustered(const std::vector<double>& p,
                                          const std::vector<double>& v,
                                          int n_clusters, double theta_between,
                                          double theta_within,
                                          std::uint64_t seed) {
  check_pmf(p, "synthesize_clustered: p");
  check_pmf(v, "synthesize_clustered: v");
  int nu = static_cast<int>(v.size());
  if (n_clusters < 1 || n_clusters > nu) {
    throw std::invalid_argument(
        "synthesize_clustered: need 1 <= n_clusters <= n_users");
  }
  ClusteredPreferences out;
  out.cluster.resize(nu);
  if (n_clusters == 1) {
    std::fill(out.cluster.begin(), out.cluster.end(), 0);
    out.Q = synthesize_preferences(p, v, theta_within, seed);
    return out;
  }

  // Round-robin assignment; cluster weight = total member activity. The
  // centres mix back to p, each cluster's rows mix back to its centre, so
  // the global identity survives the cascade.
  std::vector<std::vector<int>> members(n_clusters);
  std::vector<double> w(n_clusters, 0.0);
  for (int u = 0; u < nu; ++u) {
    int m = u % n_clusters;
    out.cluster[u] = m;
    members[m].push_back(u);
    w[m] += v[u];
  }
  Pcg32 rng = rng_for(seed, 0xa163u, 0);
  Matrix centers = synthesize_rows(p, w, theta_between, rng);

  out.Q.assign(nu, std::vector<double>(p.size(), 0.0));
  for (int m = 0; m < n_clusters; ++m) {
    std::vector<double> vm(members[m].size());
    for (std::size_t i = 0; i < members[m].size(); ++i) {
      vm[i] = w[m] > 0.0 ? v[members[m][i]] / w[m]
                         : 1.0 / static_cast<double>(members[m].size());
    }
    Pcg32 crng = rng_for(seed, 0xa164u, static_cast<std::uint64_t>(m));
    Matrix rows = synthesize_rows(centers[m], vm, theta_within, crng);
    for (std::size_t i = 0; i < members[m].size(); ++i) {
      out.Q[members[m][i]] = std::move(rows[i]);
    }
  }
  return out;
}

double average_similarity(const Matrix& Q) {
  int nu = static_cast<int>(Q.size());
  if (nu == 0) throw std::invalid_argument("average_similarity: empty matrix");
  std::vector<double> norm(nu);
  for (int u = 0; u < nu; ++u) {
    double s = 0.0;
    for (double x : Q[u]) s += x * x;
    norm[u] = std::sqrt(s);
    if (!(norm[u] > 0.0)) {
      throw std::invalid_argument("average_similarity: zero-norm row");
    }
  }
  if (nu == 1) return 1.0;
  double total = 0.0;
  long pairs = 0;
  for (int u = 0; u < nu; ++u) {
    for (int w = u + 1; w < nu; ++w) {
      double dot = 0.0;
      for (std::size_t f = 0; f < Q[u].size(); ++f) dot += Q[u][f] * Q[w][f];
      total += dot / (norm[u] * norm[w]);
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

double calibrate_theta(const std::vector<double>& p,
                       const std::vector<double>& v, double target,
                       int n_seeds, std::uint64_t seed, double tol) {
  if (n_seeds < 1) throw std::invalid_argument("calibrate_theta: n_seeds >= 1");
  auto mean_sim = [&](double theta) {
    double s = 0.0;
    for (int i = 0; i < n_seeds; ++i) {
      s += average_similarity(synthesize_preferences(p, v, theta, seed + i));
    }
    return s / n_seeds;
  };
  double lo = 0.0, hi = 1.0;
  double f_lo = mean_sim(lo), f_hi = mean_sim(hi);
  if (target > f_hi + tol || target < f_lo - tol) {
    throw std::invalid_argument(
        "calibrate_theta: target similarity unreachable");
  }
  if (std::fabs(f_lo - target) <= tol * 0.5) return lo;
  if (std::fabs(f_hi - target) <= tol * 0.5) return hi;
  for (int it = 0; it < 40 && hi - lo > 1e-4; ++it) {
    double mid = 0.5 * (lo + hi);
    double fm = mean_sim(mid);
    if (std::fabs(fm - target) <= tol * 0.25) return mid;
    if (fm < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double theta = 0.5 * (lo + hi);
  if (std::fabs(mean_sim(theta) - target) > tol) {
    throw std::runtime_error("calibrate_theta: bisection failed to meet tol");
  }
  return theta;
}

Matrix synthesize_locations(int n_users, int n_cells, double delta_a,
                            std::uint64_t seed) {
  if (n_users < 1 || n_cells < 1) {
    throw std::invalid_argument("synthesize_locations: empty dimensions");
  }
  if (delta_a < 0.0) {
    throw std::invalid_argument("synthesize_locations: delta_a must be >= 0");
  }
  std::vector<double> zipf = mzipf_pmf(n_cells, 0.0, delta_a);
  Matrix A(n_users, std::vector<double>(n_cells, 0.0));
  for (int u = 0; u < n_users; ++u) {
    Pcg32 rng = rng_for(seed, 0xa10cu, static_cast<std::uint64_t>(u));
    std::vector<int> perm(n_cells);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n_cells - 1; i > 0; --i) {
      int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
      std::swap(perm[i], perm[j]);
    }
    for (int r = 0; r < n_cells; ++r) A[u][perm[r]] = zipf[r];
  }
  return A;
}

LocalPopularity local_popularity(const DemandModel& demand) {
  int nu = demand.n_users();
  int nf = demand.n_files();
  if (nu == 0 || nf == 0 || demand.A.empty()) {
    throw std::invalid_argument("local_popularity: empty demand model");
  }
  int nb = static_cast<int>(demand.A[0].size());
  LocalPopularity out;
  out.p_fi.assign(nf, std::vector<double>(nb, 0.0));
  out.defined.assign(nb, 0);
  for (int i = 0; i < nb; ++i) {
    double denom = 0.0;
    for (int u = 0; u < nu; ++u) denom += demand.A[u][i] * demand.v[u];
    if (denom <= 0.0) {
      for (int f = 0; f < nf; ++f) {
        out.p_fi[f][i] = std::numeric_limits<double>::quiet_NaN();
      }
      continue;
    }
    out.defined[i] = 1;
    for (int f = 0; f < nf; ++f) {
      double s = 0.0;
      for (int u = 0; u < nu; ++u) {
        s += demand.A[u][i] * demand.v[u] * demand.Q[u][f];
      }
      out.p_fi[f][i] = s / denom;
    }
  }
  return out;
}

RequestLog parse_request_log(std::istream& in) {
  RequestLog log;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::size_t t1 = line.find('\t');
    std::size_t t2 = t1 == std::string::npos ? std::string::npos
                                             : line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos) {
      throw std::runtime_error("request log line " + std::to_string(line_no) +
                               ": expected user<TAB>item<TAB>count");
    }
    RequestRecord rec;
    rec.user = line.substr(0, t1);
    rec.item = line.substr(t1 + 1, t2 - t1 - 1);
    std::string cnt = line.substr(t2 + 1);
    try {
      std::size_t pos = 0;
      rec.count = std::stol(cnt, &pos);
      if (pos != cnt.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw std::runtime_error("request log line " + std::to_string(line_no) +
                               ": bad count '" + cnt + "'");
    }
    if (rec.user.empty() || rec.item.empty() || rec.count <= 0) {
      throw std::runtime_error("request log line " + std::to_string(line_no) +
                               ": empty field or nonpositive count");
    }
    log.records.push_back(std::move(rec));
  }
  if (log.records.empty()) {
    throw std::runtime_error("request log: no records");
  }
  return log;
}

EmpiricalDemand empirical_demand(const RequestLog& log, int top_users,
                                 int top_files) {
  if (top_users < 1 || top_files < 1) {
    throw std::invalid_argument("empirical_demand: need positive selection");
  }
  std::map<std::string, long> user_total;
  for (const auto& r : log.records) user_total[r.user] += r.count;

  auto take_top = [](const std::map<std::string, long>& totals, int k) {
    std::vector<std::pair<std::string, long>> v(totals.begin(), totals.end());
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    if (static_cast<int>(v.size()) > k) v.resize(k);
    std::vector<std::string> ids;
    for (auto& e : v) ids.push_back(e.first);
    std::sort(ids.begin(), ids.end());
    return ids;
  };

  std::vector<std::string> users = take_top(user_total, top_users);
  std::map<std::string, long> item_total;
  for (const auto& r : log.records) {
    if (std::binary_search(users.begin(), users.end(), r.user)) {
      item_total[r.item] += r.count;
    }
  }
  std::vector<std::string> items = take_top(item_total, top_files);

  std::map<std::string, int> uidx, fidx;
  for (std::size_t i = 0; i < users.size(); ++i) uidx[users[i]] = i;
  for (std::size_t i = 0; i < items.size(); ++i) fidx[items[i]] = i;

  Matrix counts(users.size(), std::vector<double>(items.size(), 0.0));
  for (const auto& r : log.records) {
    auto ui = uidx.find(r.user);
    auto fi = fidx.find(r.item);
    if (ui != uidx.end() && fi != fidx.end()) {
      counts[ui->second][fi->second] += static_cast<double>(r.count);
    }
  }

  // Drop selected users with no requests left after the file restriction.
  EmpiricalDemand out;
  std::vector<double> user_sum;
  for (std::size_t u = 0; u < users.size(); ++u) {
    double s = std::accumulate(counts[u].begin(), counts[u].end(), 0.0);
    if (s > 0.0) {
      out.user_ids.push_back(users[u]);
      out.Q.push_back(counts[u]);
      user_sum.push_back(s);
    }
  }
  if (out.Q.empty()) {
    throw std::runtime_error("empirical_demand: selection left no requests");
  }
  out.item_ids = items;
  double total = std::accumulate(user_sum.begin(), user_sum.end(), 0.0);
  out.p.assign(items.size(), 0.0);
  for (std::size_t u = 0; u < out.Q.size(); ++u) {
    out.v.push_back(user_sum[u] / total);
    for (std::size_t f = 0; f < items.size(); ++f) {
      out.p[f] += out.Q[u][f] / total;
      out.Q[u][f] /= user_sum[u];
    }
  }
  return out;
}

}  // namespace edgecache
