#include "edgecache/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace edgecache {

std::vector<int> realize_cache(const std::vector<double>& column, int n_cache,
                               Pcg32& rng) {
  double total = 0.0;
  for (double c : column) {
    if (c < 0.0 || c > 1.0 + 1e-9) {
      throw std::invalid_argument("realize_cache: probability outside [0, 1]");
    }
    total += c;
  }
  if (total > n_cache + 1e-6) {
    throw std::invalid_argument("realize_cache: column exceeds the budget");
  }

  double w = rng.uniform();
  std::vector<int> files;
  double start = 0.0;
  for (int f = 0; f < static_cast<int>(column.size()); ++f) {
    double end = start + column[f];
    // Slot s selects file f when s + w falls in [start, end).
    double point = std::ceil(start - w) + w;  // smallest s + w >= start
    if (point < end && point < n_cache) files.push_back(f);
    start = end;
  }
  return files;
}

namespace {

int draw_categorical(const std::vector<double>& pmf, Pcg32& rng) {
  double r = rng.uniform();
  double acc = 0.0;
  int last = static_cast<int>(pmf.size()) - 1;
  for (int i = 0; i <= last; ++i) {
    acc += pmf[i];
    if (r < acc) return i;
  }
  return last;
}

}  // namespace

Request sample_request(const DemandModel& demand, const NetworkLayout& layout,
                       Pcg32& rng) {
  Request req;
  req.user = draw_categorical(demand.v, rng);
  req.file = draw_categorical(demand.Q[req.user], rng);
  req.cell = draw_categorical(demand.A[req.user], rng);
  req.point = sample_point_in_cell(layout, req.cell, rng);
  return req;
}

namespace {

struct UserAccum {
  long requests = 0;
  long successes = 0;
  double rate_sum = 0.0;
  double rate_sumsq = 0.0;
};

constexpr std::uint64_t kRequestStream = 0x5e9u;
constexpr std::uint64_t kCacheStream = 0xcaceu;

}  // namespace

SimResult simulate(const CachingPolicy& policy, const DemandModel& demand,
                   const NetworkLayout& layout,
                   const SubregionTable& subregions, const FrequencyPlan& plan,
                   const RadioConfig& radio, double gamma0,
                   const SimOptions& opt) {
  int nu = demand.n_users();
  int nf = demand.n_files();
  int nb = layout.n_bs();
  validate_policy(policy);
  if (policy.n_files() != nf || policy.n_bs() != nb) {
    throw std::invalid_argument("simulate: policy dimensions mismatch");
  }
  if (static_cast<int>(subregions.by_cell.size()) != nb) {
    throw std::invalid_argument("simulate: partition/layout mismatch");
  }
  for (const auto& row : demand.A) {
    if (static_cast<int>(row.size()) != nb) {
      throw std::invalid_argument("simulate: demand/layout mismatch");
    }
  }
  if (opt.n_requests < 1 || opt.epochs < 1 || opt.threads < 1) {
    throw std::invalid_argument("simulate: counts must be positive");
  }
  if (gamma0 < 0.0) {
    throw std::invalid_argument("simulate: negative SINR threshold");
  }
  for (const auto* v : {&opt.per_user_bandwidth, &opt.per_user_backhaul}) {
    if (!v->empty() && static_cast<int>(v->size()) != nu) {
      throw std::invalid_argument("simulate: per-user vector size mismatch");
    }
  }

  std::vector<double> bw(nu, radio.bandwidth_hz);
  std::vector<double> bh(nu, radio.backhaul_rate_bps);
  for (int u = 0; u < nu; ++u) {
    if (!opt.per_user_bandwidth.empty()) bw[u] = opt.per_user_bandwidth[u];
    if (!opt.per_user_backhaul.empty()) bh[u] = opt.per_user_backhaul[u];
  }

  int K = subregions.K;
  long n = opt.n_requests;
  int epochs = static_cast<int>(std::min<long>(opt.epochs, n));

  // All cache realizations drawn up front from their own streams; flags give
  // O(1) membership tests in the request loop.
  std::vector<std::vector<char>> cached(
      static_cast<std::size_t>(epochs) * nb, std::vector<char>(nf, 0));
  for (int e = 0; e < epochs; ++e) {
    for (int b = 0; b < nb; ++b) {
      std::vector<double> column(nf);
      for (int f = 0; f < nf; ++f) column[f] = policy.c[f][b];
      Pcg32 rng = rng_for(opt.seed, kCacheStream,
                          static_cast<std::uint64_t>(e) * nb + b);
      for (int f : realize_cache(column, policy.n_cache, rng)) {
        cached[static_cast<std::size_t>(e) * nb + b][f] = 1;
      }
    }
  }

  SimResult res;
  res.n_requests = n;
  if (opt.record_outcomes) res.outcomes.resize(n);

  bool flat_rates = opt.record_rate_samples;
  std::vector<double> rates;
  std::vector<int> rate_user;
  if (flat_rates) {
    rates.resize(n);
    rate_user.resize(n);
  }

  int nthreads = static_cast<int>(std::min<long>(opt.threads, n));
  std::vector<std::vector<UserAccum>> partial(
      nthreads, std::vector<UserAccum>(nu));

  auto worker = [&](int t, long lo, long hi) {
    auto& acc = partial[t];
    for (long g = lo; g < hi; ++g) {
      Pcg32 rng = rng_for(opt.seed, kRequestStream,
                          static_cast<std::uint64_t>(g));
      Request req = sample_request(demand, layout, rng);
      int e = static_cast<int>(g * epochs / n);
      const char* cache_row = nullptr;
      auto order = knn_order(layout, req.point, K);

      int serving = -1;
      for (int b : order) {
        cache_row = cached[static_cast<std::size_t>(e) * nb + b].data();
        if (cache_row[req.file]) {
          serving = b;
          break;
        }
      }
      bool backhaul = serving < 0;
      if (backhaul) serving = order[0];

      LinkGains lg = link_gains(layout, plan, radio, serving, req.point);
      double signal = rng.exponential() / lg.serving;
      double denom = lg.noise_over_p;
      for (double r_alpha : lg.interferers) {
        denom += rng.exponential() / r_alpha;
      }
      double sinr = signal / denom;
      double shannon = bw[req.user] * std::log2(1.0 + sinr);
      bool success = !backhaul && sinr > gamma0;
      double rate = backhaul ? std::min(shannon, bh[req.user]) : shannon;

      auto& a = acc[req.user];
      ++a.requests;
      a.successes += success ? 1 : 0;
      a.rate_sum += rate;
      a.rate_sumsq += rate * rate;

      if (opt.record_outcomes) {
        RequestOutcome& out = res.outcomes[g];
        out.user = req.user;
        out.file = req.file;
        out.cell = req.cell;
        out.point = req.point;
        out.serving = serving;
        out.backhaul = backhaul;
        out.sinr = sinr;
        out.success = success;
        out.rate_bps = rate;
      }
      if (flat_rates) {
        rates[g] = rate;
        rate_user[g] = req.user;
      }
    }
  };

  if (nthreads == 1) {
    worker(0, 0, n);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) {
      long lo = n * t / nthreads;
      long hi = n * (t + 1) / nthreads;
      pool.emplace_back(worker, t, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  res.users.assign(nu, UserStats{});
  double total_rate = 0.0;
  long total_success = 0;
  for (int u = 0; u < nu; ++u) {
    UserAccum merged;
    for (int t = 0; t < nthreads; ++t) {
      merged.requests += partial[t][u].requests;
      merged.successes += partial[t][u].successes;
      merged.rate_sum += partial[t][u].rate_sum;
      merged.rate_sumsq += partial[t][u].rate_sumsq;
    }
    UserStats& s = res.users[u];
    s.requests = merged.requests;
    s.defined = merged.requests > 0;
    if (s.defined) {
      double m = static_cast<double>(merged.requests);
      s.success = static_cast<double>(merged.successes) / m;
      s.success_se = std::sqrt(s.success * (1.0 - s.success) / m);
      s.rate_bps = merged.rate_sum / m;
      if (merged.requests > 1) {
        double var = std::max(
            0.0, (merged.rate_sumsq - m * s.rate_bps * s.rate_bps) / (m - 1));
        s.rate_se = std::sqrt(var / m);
      }
    }
    total_rate += merged.rate_sum;
    total_success += merged.successes;
  }
  res.network_success = static_cast<double>(total_success) / n;
  res.network_rate_bps = total_rate / n;

  if (flat_rates) {
    res.rate_samples.assign(nu, {});
    for (long g = 0; g < n; ++g) {
      res.rate_samples[rate_user[g]].push_back(rates[g]);
    }
  }
  return res;
}

}  // namespace edgecache
