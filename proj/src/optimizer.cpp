#include "edgecache/optimizer.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "edgecache/rng.hpp"

namespace edgecache {

namespace {

int var_index(int f, int b, int n_bs) { return f * n_bs + b; }

void check_demand_dims(const DemandModel& demand, int n_bs) {
  int nu = demand.n_users();
  int nf = demand.n_files();
  if (nu == 0 || nf == 0) {
    throw std::invalid_argument("demand: empty user or file set");
  }
  if (static_cast<int>(demand.A.size()) != nu ||
      static_cast<int>(demand.Q.size()) != nu) {
    throw std::invalid_argument("demand: A/Q row count mismatch");
  }
  for (const auto& row : demand.A) {
    if (static_cast<int>(row.size()) != n_bs) {
      throw std::invalid_argument("demand: A column count mismatch");
    }
  }
  for (const auto& row : demand.Q) {
    if (static_cast<int>(row.size()) != nf) {
      throw std::invalid_argument("demand: Q column count mismatch");
    }
  }
}

}  // namespace

double SpProblem::g_user(int u, const Matrix& z) const {
  double acc = 0.0;
  for (int pid = 0; pid < n_prefix(); ++pid) {
    double w = user_geo[u][pid];
    if (w == 0.0) continue;
    for (int f = 0; f < n_files; ++f) {
      double coef = q[u][f] * w;
      if (coef == 0.0) continue;
      double mono = 1.0;
      for (int b : prefix_bs[pid]) mono *= z[f][b];
      acc += coef * mono;
    }
  }
  return acc;
}

double SpProblem::objective(const Matrix& z, double t) const {
  double acc = eta * t;
  if (eta < 1.0) {
    for (int u = 0; u < n_users(); ++u) {
      if (v[u] == 0.0) continue;
      acc += (1.0 - eta) * v[u] * g_user(u, z);
    }
  }
  return acc;
}

double SpProblem::utility_from_sp(int u, const Matrix& z) const {
  return scale * (cu[u] - g_user(u, z));
}

SpProblem build_sp(const DemandModel& demand, const SubregionTable& subregions,
                   const UtilityTable& table, int n_cache, double eta,
                   const SpOptions& opt) {
  int nb = static_cast<int>(subregions.by_cell.size());
  check_demand_dims(demand, nb);
  if (eta < 0.0 || eta > 1.0) {
    throw std::invalid_argument("build_sp: eta outside [0, 1]");
  }
  if (n_cache < 0) throw std::invalid_argument("build_sp: negative n_cache");
  if (table.total_regions() != subregions.total()) {
    throw std::invalid_argument("build_sp: table/partition size mismatch");
  }
  int K = table.K;
  int nu = demand.n_users();
  int nf = demand.n_files();

  SpProblem sp;
  sp.n_files = nf;
  sp.n_bs = nb;
  sp.n_cache = n_cache;
  sp.eta = eta;
  sp.z_min = opt.z_min;
  sp.q = demand.Q;
  sp.v = demand.v;

  double scale = 0.0;
  for (double x : table.values) scale = std::max(scale, x);
  if (!(scale > 0.0)) {
    throw std::invalid_argument("build_sp: service table has no positive entry");
  }
  sp.scale = scale;

  // Register monomial prefixes (first k BSs of each sub-region order list)
  // and gather, per (group, cell), the area- and rank-difference weights
  // attached to each prefix.
  std::map<std::vector<int>, int> prefix_id;
  int n_groups = table.n_groups;
  std::vector<std::vector<std::vector<std::pair<int, double>>>> bucket(
      n_groups, std::vector<std::vector<std::pair<int, double>>>(nb));
  std::vector<std::vector<double>> rank1(n_groups,
                                         std::vector<double>(nb, 0.0));
  for (int g = 0; g < n_groups; ++g) {
    for (int i = 0; i < nb; ++i) {
      double cell_area = subregions.cell_area[i];
      if (cell_area <= 0.0) continue;
      for (const auto& r : subregions.by_cell[i]) {
        double w = r.area / cell_area;
        rank1[g][i] += w * table.value(g, i, r.index_in_cell, 1) / scale;
        for (int k = 1; k <= K; ++k) {
          int next = opt.form == TelescopeForm::consecutive ? k + 1 : K + 1;
          double raw = table.value(g, i, r.index_in_cell, k) -
                       table.value(g, i, r.index_in_cell, next);
          if (raw < -1e-9 * std::max(1.0, scale)) {
            throw std::invalid_argument(
                "build_sp: service values increase with rank (table "
                "inconsistency)");
          }
          double dt = std::max(raw, 0.0) / scale;
          if (dt == 0.0 && opt.form == TelescopeForm::consecutive) continue;
          std::vector<int> prefix(r.order.begin(), r.order.begin() + k);
          auto it = prefix_id.find(prefix);
          if (it == prefix_id.end()) {
            it = prefix_id.emplace(prefix, static_cast<int>(sp.prefix_bs.size()))
                     .first;
            sp.prefix_bs.push_back(prefix);
          }
          bucket[g][i].emplace_back(it->second, w * dt);
        }
      }
    }
  }

  int np = sp.n_prefix();
  sp.user_geo.assign(nu, std::vector<double>(np, 0.0));
  sp.cu.assign(nu, 0.0);
  for (int u = 0; u < nu; ++u) {
    int g = table.group_of(u);
    for (int i = 0; i < nb; ++i) {
      double a = demand.A[u][i];
      if (a == 0.0) continue;
      sp.cu[u] += a * rank1[g][i];
      for (const auto& [pid, w] : bucket[g][i]) {
        sp.user_geo[u][pid] += a * w;
      }
    }
  }
  double cmax = *std::max_element(sp.cu.begin(), sp.cu.end());
  sp.shift.resize(nu);
  for (int u = 0; u < nu; ++u) sp.shift[u] = cmax - sp.cu[u];
  return sp;
}

double CondensedCache::value(const Matrix& z, int b) const {
  if (!active) return 0.0;
  double lv = log_const[b];
  for (std::size_t f = 0; f < z.size(); ++f) {
    lv -= eps[f][b] * std::log(z[f][b]);
  }
  return std::exp(lv);
}

CondensedCache condense_gp(const SpProblem& sp, const Matrix& eps) {
  CondensedCache cc;
  if (sp.n_cache >= sp.n_files) {
    cc.active = false;
    return cc;
  }
  if (static_cast<int>(eps.size()) != sp.n_files) {
    throw std::invalid_argument("condense_gp: weight row count mismatch");
  }
  cc.eps = eps;
  cc.log_const.assign(sp.n_bs, std::log(sp.n_files - sp.n_cache));
  for (int b = 0; b < sp.n_bs; ++b) {
    double sum = 0.0;
    for (int f = 0; f < sp.n_files; ++f) {
      double e = eps[f][b];
      if (!(e > 0.0)) {
        throw std::invalid_argument("condense_gp: nonpositive weight");
      }
      sum += e;
      cc.log_const[b] += e * std::log(e);
    }
    if (std::fabs(sum - 1.0) > 1e-9) {
      throw std::invalid_argument("condense_gp: weights must sum to 1 per BS");
    }
  }
  return cc;
}

namespace {

struct Term {
  double log_coef;
  std::vector<std::pair<int, double>> a;  // sparse exponent vector
};

double term_theta(const Term& t, const Eigen::VectorXd& x) {
  double v = t.log_coef;
  for (const auto& [i, c] : t.a) v += c * x[i];
  return v;
}

// Log-sum-exp value of a constraint's terms, max-shifted.
double lse_value(const std::vector<Term>& terms, const Eigen::VectorXd& x) {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& t : terms) m = std::max(m, term_theta(t, x));
  double s = 0.0;
  for (const auto& t : terms) s += std::exp(term_theta(t, x) - m);
  return m + std::log(s);
}

struct GpWork {
  const SpProblem* sp;
  const CondensedCache* cache;
  int nz;            // number of z variables
  int nvars;         // nz + (has_t ? 1 : 0)
  bool has_t;
  int t_idx;
  double lo;         // ln z_min
  std::vector<Term> obj;
  std::vector<std::vector<Term>> fair;

  int n_constraints() const {
    int m = static_cast<int>(fair.size()) + 2 * nz;
    if (cache->active) m += sp->n_bs;
    return m;
  }

  bool feasible(const Eigen::VectorXd& x) const {
    for (int v = 0; v < nz; ++v) {
      if (!(x[v] < 0.0) || !(x[v] > lo)) return false;
    }
    for (const auto& terms : fair) {
      if (!(lse_value(terms, x) < 0.0)) return false;
    }
    if (cache->active) {
      for (int b = 0; b < sp->n_bs; ++b) {
        double av = cache->log_const[b];
        for (int f = 0; f < sp->n_files; ++f) {
          av -= cache->eps[f][b] * x[var_index(f, b, sp->n_bs)];
        }
        if (!(av < 0.0)) return false;
      }
    }
    return true;
  }

  double f0(const Eigen::VectorXd& x) const {
    double acc = 0.0;
    for (const auto& t : obj) acc += std::exp(term_theta(t, x));
    return acc;
  }

  // phi = tau * f0 + barriers; requires feasible(x).
  double phi(const Eigen::VectorXd& x, double tau) const {
    double acc = tau * f0(x);
    for (int v = 0; v < nz; ++v) {
      acc += -std::log(-x[v]) - std::log(x[v] - lo);
    }
    for (const auto& terms : fair) acc += -std::log(-lse_value(terms, x));
    if (cache->active) {
      for (int b = 0; b < sp->n_bs; ++b) {
        double av = cache->log_const[b];
        for (int f = 0; f < sp->n_files; ++f) {
          av -= cache->eps[f][b] * x[var_index(f, b, sp->n_bs)];
        }
        acc += -std::log(-av);
      }
    }
    return acc;
  }

  void grad_hess(const Eigen::VectorXd& x, double tau, Eigen::VectorXd& g,
                 Eigen::MatrixXd& h) const {
    g.setZero(nvars);
    h.setZero(nvars, nvars);
    for (const auto& t : obj) {
      double w = tau * std::exp(term_theta(t, x));
      for (const auto& [i, ci] : t.a) {
        g[i] += w * ci;
        for (const auto& [j, cj] : t.a) h(i, j) += w * ci * cj;
      }
    }
    Eigen::VectorXd gl(nvars);
    for (const auto& terms : fair) {
      double m = -std::numeric_limits<double>::infinity();
      for (const auto& t : terms) m = std::max(m, term_theta(t, x));
      double s = 0.0;
      for (const auto& t : terms) s += std::exp(term_theta(t, x) - m);
      double lval = m + std::log(s);
      double slack = -lval;
      gl.setZero();
      for (const auto& t : terms) {
        double p = std::exp(term_theta(t, x) - m) / s;
        for (const auto& [i, ci] : t.a) {
          gl[i] += p * ci;
          for (const auto& [j, cj] : t.a) h(i, j) += p * ci * cj / slack;
        }
      }
      g += gl / slack;
      double w2 = 1.0 / (slack * slack) - 1.0 / slack;
      h += w2 * (gl * gl.transpose());
    }
    if (cache->active) {
      for (int b = 0; b < sp->n_bs; ++b) {
        double av = cache->log_const[b];
        for (int f = 0; f < sp->n_files; ++f) {
          av -= cache->eps[f][b] * x[var_index(f, b, sp->n_bs)];
        }
        double slack = -av;
        for (int f = 0; f < sp->n_files; ++f) {
          int vi = var_index(f, b, sp->n_bs);
          g[vi] += -cache->eps[f][b] / slack;
          for (int f2 = 0; f2 < sp->n_files; ++f2) {
            h(vi, var_index(f2, b, sp->n_bs)) +=
                cache->eps[f][b] * cache->eps[f2][b] / (slack * slack);
          }
        }
      }
    }
    for (int v = 0; v < nz; ++v) {
      double up = -x[v];
      double dn = x[v] - lo;
      g[v] += 1.0 / up - 1.0 / dn;
      h(v, v) += 1.0 / (up * up) + 1.0 / (dn * dn);
    }
  }
};

GpWork build_work(const SpProblem& sp, const CondensedCache& cache) {
  GpWork w;
  w.sp = &sp;
  w.cache = &cache;
  w.nz = sp.n_files * sp.n_bs;
  w.has_t = sp.eta > 0.0;
  w.nvars = w.nz + (w.has_t ? 1 : 0);
  w.t_idx = w.nz;
  w.lo = std::log(sp.z_min);

  // Popularity-weighted network term of the objective.
  if (sp.eta < 1.0) {
    for (int f = 0; f < sp.n_files; ++f) {
      for (int pid = 0; pid < sp.n_prefix(); ++pid) {
        double coef = 0.0;
        for (int u = 0; u < sp.n_users(); ++u) {
          coef += sp.v[u] * sp.q[u][f] * sp.user_geo[u][pid];
        }
        coef *= 1.0 - sp.eta;
        if (coef <= 0.0) continue;
        Term t;
        t.log_coef = std::log(coef);
        for (int b : sp.prefix_bs[pid]) {
          t.a.emplace_back(var_index(f, b, sp.n_bs), 1.0);
        }
        w.obj.push_back(std::move(t));
      }
    }
  }
  if (w.has_t) {
    w.obj.push_back(Term{std::log(sp.eta), {{w.t_idx, 1.0}}});
    for (int u = 0; u < sp.n_users(); ++u) {
      std::vector<Term> terms;
      for (int f = 0; f < sp.n_files; ++f) {
        if (sp.q[u][f] <= 0.0) continue;
        for (int pid = 0; pid < sp.n_prefix(); ++pid) {
          double coef = sp.q[u][f] * sp.user_geo[u][pid];
          if (coef <= 0.0) continue;
          Term t;
          t.log_coef = std::log(coef);
          for (int b : sp.prefix_bs[pid]) {
            t.a.emplace_back(var_index(f, b, sp.n_bs), 1.0);
          }
          t.a.emplace_back(w.t_idx, -1.0);
          terms.push_back(std::move(t));
        }
      }
      if (sp.shift[u] > 0.0) {
        terms.push_back(Term{std::log(sp.shift[u]), {{w.t_idx, -1.0}}});
      }
      if (!terms.empty()) w.fair.push_back(std::move(terms));
    }
    if (w.fair.empty()) {
      throw std::invalid_argument(
          "solve_gp: fairness active but every constraint vanished");
    }
  }
  return w;
}

std::string iterate_dump(const Eigen::VectorXd& x, double tau, double lambda2) {
  std::ostringstream os;
  os << "tau=" << tau << " decrement2=" << lambda2 << " x=[";
  for (int i = 0; i < std::min<int>(8, x.size()); ++i) {
    os << (i ? "," : "") << x[i];
  }
  if (x.size() > 8) os << ",...";
  os << "]";
  return os.str();
}

}  // namespace

GpResult solve_gp(const SpProblem& sp, const CondensedCache& cache,
                  const Matrix& z_init, double t_init, const GpOptions& opt) {
  GpWork w = build_work(sp, cache);
  Eigen::VectorXd x(w.nvars);
  for (int f = 0; f < sp.n_files; ++f) {
    for (int b = 0; b < sp.n_bs; ++b) {
      double z = z_init[f][b];
      if (!(z > 0.0)) throw std::invalid_argument("solve_gp: z_init <= 0");
      x[var_index(f, b, sp.n_bs)] = std::log(z);
    }
  }
  if (w.has_t) {
    if (!(t_init > 0.0)) throw std::invalid_argument("solve_gp: t_init <= 0");
    x[w.t_idx] = std::log(t_init);
  }
  if (!w.feasible(x)) {
    throw std::invalid_argument("solve_gp: start is not strictly feasible");
  }

  GpResult res;
  res.converged = true;
  double tau = opt.tau0;
  int m = w.n_constraints();
  Eigen::VectorXd g(w.nvars);
  Eigen::MatrixXd h(w.nvars, w.nvars);
  int total = 0;
  while (true) {
    for (int it = 0; it < 200; ++it) {
      if (total >= opt.newton_max) {
        res.converged = false;
        break;
      }
      w.grad_hess(x, tau, g, h);
      double base = w.phi(x, tau);
      // Near the end of the barrier schedule the Hessian's conditioning can
      // exceed what LLT resolves; escalate a ridge until the computed step
      // is a descent direction that the line search accepts.
      double ridge = 0.0;
      double diag_max = std::max(1.0, h.diagonal().maxCoeff());
      bool moved = false;
      bool stage_done = false;
      double lambda2 = 0.0;
      for (int attempt = 0; attempt < 14 && !moved && !stage_done; ++attempt) {
        Eigen::MatrixXd hr = h;
        if (ridge > 0.0) hr.diagonal().array() += ridge;
        Eigen::LLT<Eigen::MatrixXd> llt(hr);
        if (llt.info() != Eigen::Success) {
          ridge = std::max(ridge * 100.0, 1e-12 * diag_max);
          continue;
        }
        Eigen::VectorXd dx = llt.solve(-g);
        lambda2 = -g.dot(dx);
        if (!std::isfinite(lambda2) || lambda2 <= 0.0) {
          ridge = std::max(ridge * 100.0, 1e-12 * diag_max);
          continue;
        }
        // phi scales with tau, so the centering exit must too; the stage
        // suboptimality this leaves in the original objective is
        // lambda2 / tau, independent of the stage.
        if (lambda2 / 2.0 <= opt.newton_tol * std::max(1.0, tau)) {
          stage_done = true;
          break;
        }
        double slope = -lambda2;
        double alpha = 1.0;
        while (alpha >= 1e-16) {
          Eigen::VectorXd xn = x + alpha * dx;
          if (w.feasible(xn)) {
            double pn = w.phi(xn, tau);
            if (std::isfinite(pn) && pn <= base + 0.25 * alpha * slope) {
              x = xn;
              moved = true;
              break;
            }
          }
          alpha *= 0.5;
        }
        if (!moved) ridge = std::max(ridge * 100.0, 1e-12 * diag_max);
      }
      if (stage_done) break;
      ++total;
      if (!moved) {
        if (lambda2 > 1e-4) {
          throw std::runtime_error("solve_gp: line search failed; " +
                                   iterate_dump(x, tau, lambda2));
        }
        break;  // numeric floor near the stage optimum
      }
    }
    if (!res.converged) break;
    if (m / tau <= opt.barrier_gap) break;
    tau *= opt.mu;
  }

  res.newton_iters = total;
  res.z.assign(sp.n_files, std::vector<double>(sp.n_bs, 1.0));
  for (int f = 0; f < sp.n_files; ++f) {
    for (int b = 0; b < sp.n_bs; ++b) {
      res.z[f][b] = std::exp(x[var_index(f, b, sp.n_bs)]);
    }
  }
  res.t = w.has_t ? std::exp(x[w.t_idx]) : 0.0;
  res.objective = sp.objective(res.z, res.t);
  return res;
}

namespace {

// Round near-one entries up, then restore any per-BS budget overshoot by
// scaling the remaining fractional entries down.
CachingPolicy extract_policy(const Matrix& z, int n_cache) {
  int nf = static_cast<int>(z.size());
  int nb = nf ? static_cast<int>(z[0].size()) : 0;
  CachingPolicy pol;
  pol.n_cache = n_cache;
  pol.c.assign(nf, std::vector<double>(nb, 0.0));
  for (int f = 0; f < nf; ++f) {
    for (int b = 0; b < nb; ++b) {
      double c = std::clamp(1.0 - z[f][b], 0.0, 1.0);
      if (c >= 1.0 - 1e-4) c = 1.0;
      pol.c[f][b] = c;
    }
  }
  for (int b = 0; b < nb; ++b) {
    double rounded = 0.0, frac = 0.0;
    for (int f = 0; f < nf; ++f) {
      (pol.c[f][b] == 1.0 ? rounded : frac) += pol.c[f][b];
    }
    double excess = rounded + frac - n_cache;
    if (excess <= 1e-12 || frac <= 0.0) continue;
    double keep = std::max(0.0, (frac - excess) / frac);
    for (int f = 0; f < nf; ++f) {
      if (pol.c[f][b] < 1.0) pol.c[f][b] *= keep;
    }
  }
  return pol;
}

double frobenius_gap(const Matrix& a, const Matrix& b) {
  double acc = 0.0;
  for (std::size_t f = 0; f < a.size(); ++f) {
    for (std::size_t j = 0; j < a[f].size(); ++j) {
      double d = a[f][j] - b[f][j];
      acc += d * d;
    }
  }
  return std::sqrt(acc);
}

double worst_violation(const SpProblem& sp, const Matrix& z, double t) {
  double worst = 0.0;
  for (int b = 0; b < sp.n_bs; ++b) {
    double load = 0.0;
    for (int f = 0; f < sp.n_files; ++f) load += 1.0 - z[f][b];
    worst = std::max(worst, load - sp.n_cache);
  }
  for (int f = 0; f < sp.n_files; ++f) {
    for (int b = 0; b < sp.n_bs; ++b) {
      worst = std::max(worst, sp.z_min - z[f][b]);
      worst = std::max(worst, z[f][b] - 1.0);
    }
  }
  if (sp.eta > 0.0) {
    for (int u = 0; u < sp.n_users(); ++u) {
      worst = std::max(worst, sp.g_user(u, z) + sp.shift[u] - t);
    }
  }
  return std::max(worst, 0.0);
}

}  // namespace

std::pair<CachingPolicy, SolverTrace> solve_p0(const DemandModel& demand,
                                               const SubregionTable& subregions,
                                               const UtilityTable& table,
                                               int n_cache, double eta,
                                               const SolveOptions& opt) {
  SolverTrace trace;
  if (n_cache == 0) {
    CachingPolicy empty;
    empty.n_cache = 0;
    empty.c.assign(demand.n_files(),
                   std::vector<double>(subregions.by_cell.size(), 0.0));
    trace.converged = true;
    return {empty, trace};
  }
  SpProblem sp = build_sp(demand, subregions, table, n_cache, eta, opt.sp);
  int nf = sp.n_files, nb = sp.n_bs;
  double c0 = std::min(1.0, static_cast<double>(n_cache) / nf);
  Matrix z_prev(nf, std::vector<double>(nb, 1.0 - c0));
  bool all_ok = true;

  for (int n = 0; n < opt.max_iter; ++n) {
    Matrix eps(nf, std::vector<double>(nb, 0.0));
    for (int b = 0; b < nb; ++b) {
      double sum = 0.0;
      for (int f = 0; f < nf; ++f) sum += z_prev[f][b];
      for (int f = 0; f < nf; ++f) {
        eps[f][b] = sum > 0.0 ? z_prev[f][b] / sum : 1.0 / nf;
      }
    }
    CondensedCache cc = condense_gp(sp, eps);

    // Pull the warm start strictly inside the new condensed region: scaling
    // the cache probabilities by (1 - delta) raises every z, which can only
    // loosen the constraint, and keeps the box strict.
    double delta = opt.interior_shift;
    Matrix z_ws(nf, std::vector<double>(nb));
    for (int f = 0; f < nf; ++f) {
      for (int b = 0; b < nb; ++b) {
        double c = 1.0 - z_prev[f][b];
        z_ws[f][b] =
            std::clamp(1.0 - (1.0 - delta) * c, 1.5 * sp.z_min, 1.0 - 1e-9);
      }
    }
    double t_ws = 0.0;
    if (eta > 0.0) {
      for (int u = 0; u < sp.n_users(); ++u) {
        t_ws = std::max(t_ws, sp.g_user(u, z_ws) + sp.shift[u]);
      }
      t_ws = 1.01 * t_ws + 1e-12;
    }

    GpOptions gp_opt = opt.gp;
    if (n > 0 && opt.warm_tau0 > gp_opt.tau0) gp_opt.tau0 = opt.warm_tau0;
    GpResult gp;
    try {
      gp = solve_gp(sp, cc, z_ws, t_ws, gp_opt);
    } catch (const std::runtime_error&) {
      if (gp_opt.tau0 == opt.gp.tau0) throw;
      gp = solve_gp(sp, cc, z_ws, t_ws, opt.gp);
    }
    all_ok = all_ok && gp.converged;

    TraceRow row;
    row.objective = gp.objective;
    row.step_norm = frobenius_gap(gp.z, z_prev);
    row.max_violation = worst_violation(sp, gp.z, gp.t);
    trace.rows.push_back(row);
    trace.eps_history.push_back(std::move(eps));
    ++trace.iterations;
    z_prev = gp.z;
    if (row.step_norm <= opt.tol) {
      trace.converged = true;
      break;
    }
  }
  trace.converged = trace.converged && all_ok;
  for (std::size_t i = 1; i < trace.rows.size(); ++i) {
    if (trace.rows[i].objective > trace.rows[i - 1].objective + 1e-8) {
      trace.objective_monotone = false;
    }
  }
  return {extract_policy(z_prev, n_cache), trace};
}

CachingPolicy policy_local_pop(const DemandModel& demand, int n_cache) {
  LocalPopularity lp = local_popularity(demand);
  int nf = demand.n_files();
  int nb = static_cast<int>(lp.defined.size());
  CachingPolicy pol;
  pol.n_cache = n_cache;
  pol.c.assign(nf, std::vector<double>(nb, 0.0));
  for (int b = 0; b < nb; ++b) {
    if (!lp.defined[b]) {
      throw std::invalid_argument(
          "policy_local_pop: no activity reaches cell " + std::to_string(b));
    }
    std::vector<int> files(nf);
    std::iota(files.begin(), files.end(), 0);
    std::stable_sort(files.begin(), files.end(), [&](int a, int c) {
      return lp.p_fi[a][b] > lp.p_fi[c][b];
    });
    for (int r = 0; r < std::min(n_cache, nf); ++r) pol.c[files[r]][b] = 1.0;
  }
  return pol;
}

std::vector<UserPosition> sample_user_positions(const DemandModel& demand,
                                                const NetworkLayout& layout,
                                                std::uint64_t seed) {
  int nu = demand.n_users();
  std::vector<UserPosition> out(nu);
  for (int u = 0; u < nu; ++u) {
    Pcg32 rng = rng_for(seed, 0xf3a7u, static_cast<std::uint64_t>(u));
    double r = rng.uniform();
    double acc = 0.0;
    int cell = layout.n_bs() - 1;
    for (int i = 0; i < layout.n_bs(); ++i) {
      acc += demand.A[u][i];
      if (r < acc) {
        cell = i;
        break;
      }
    }
    out[u].cell = cell;
    out[u].point = sample_point_in_cell(layout, cell, rng);
  }
  return out;
}

CachingPolicy policy_femtocaching(const DemandModel& demand,
                                  const NetworkLayout& layout,
                                  const FrequencyPlan& plan,
                                  const RadioConfig& radio,
                                  const UtilityTable& table,
                                  const std::vector<UserPosition>& positions,
                                  PreferenceMode mode, int n_cache) {
  int nu = demand.n_users();
  int nf = demand.n_files();
  int nb = layout.n_bs();
  if (static_cast<int>(positions.size()) != nu) {
    throw std::invalid_argument("policy_femtocaching: one position per user");
  }
  int K = table.K;

  std::vector<double> act(nu, 1.0 / nu);
  Matrix pref(nu, demand.p);
  if (mode == PreferenceMode::individual) {
    act = demand.v;
    pref = demand.Q;
  }

  // Exact per-position service values for each rank and the backhaul tail.
  Matrix sv(nu, std::vector<double>(K + 1, 0.0));
  std::vector<std::vector<int>> order(nu);
  for (int u = 0; u < nu; ++u) {
    order[u] = knn_order(layout, positions[u].point, K);
    for (int k = 1; k <= K; ++k) {
      int serving = order[u][k - 1];
      sv[u][k - 1] =
          table.metric == Metric::success
              ? success_probability_point(layout, plan, radio, serving,
                                          positions[u].point, table.gamma0)
              : rate_point(layout, plan, radio, serving, positions[u].point);
    }
    sv[u][K] = table.metric == Metric::success
                   ? 0.0
                   : backhaul_rate_point(layout, plan, radio, order[u][0],
                                         positions[u].point);
  }

  std::vector<std::vector<char>> cached(nf, std::vector<char>(nb, 0));
  std::vector<int> load(nb, 0);
  // best_rank[u][f]: smallest k whose BS holds f (K -> backhaul fallback).
  std::vector<std::vector<int>> best_rank(nu, std::vector<int>(nf, K));

  int slots = std::min(n_cache, nf) * nb;
  for (int step = 0; step < slots; ++step) {
    double best_gain = -1.0;
    int best_f = -1, best_b = -1;
    for (int f = 0; f < nf; ++f) {
      for (int b = 0; b < nb; ++b) {
        if (cached[f][b] || load[b] >= n_cache) continue;
        double gain = 0.0;
        for (int u = 0; u < nu; ++u) {
          if (act[u] == 0.0 || pref[u][f] == 0.0) continue;
          for (int k = 0; k < best_rank[u][f]; ++k) {
            if (order[u][k] == b) {
              gain += act[u] * pref[u][f] * (sv[u][k] - sv[u][best_rank[u][f]]);
              break;
            }
          }
        }
        if (gain > best_gain + 1e-15) {
          best_gain = gain;
          best_f = f;
          best_b = b;
        }
      }
    }
    if (best_f < 0) break;
    cached[best_f][best_b] = 1;
    ++load[best_b];
    for (int u = 0; u < nu; ++u) {
      for (int k = 0; k < best_rank[u][best_f]; ++k) {
        if (order[u][k] == best_b) {
          best_rank[u][best_f] = k;
          break;
        }
      }
    }
  }

  CachingPolicy pol;
  pol.n_cache = n_cache;
  pol.c.assign(nf, std::vector<double>(nb, 0.0));
  for (int f = 0; f < nf; ++f) {
    for (int b = 0; b < nb; ++b) pol.c[f][b] = cached[f][b] ? 1.0 : 0.0;
  }
  return pol;
}

DemandModel popularity_demand(const DemandModel& demand) {
  DemandModel out = demand;
  for (auto& row : out.Q) row = demand.p;
  out.v.assign(demand.n_users(), 1.0 / demand.n_users());
  return out;
}

double p0_objective(const DemandModel& demand, const SubregionTable& subregions,
                    const UtilityTable& table, const CachingPolicy& policy,
                    double eta) {
  double acc = 0.0;
  if (eta < 1.0) {
    acc += (1.0 - eta) * network_utility(demand, subregions, table, policy);
  }
  if (eta > 0.0) {
    acc += eta * min_utility(demand, subregions, table, policy).value;
  }
  return acc;
}

namespace {

// Next size-k index combination in lexicographic order; false after the last.
bool next_combination(std::vector<int>& comb, int n) {
  int k = static_cast<int>(comb.size());
  for (int i = k - 1; i >= 0; --i) {
    if (comb[i] < n - k + i) {
      ++comb[i];
      for (int j = i + 1; j < k; ++j) comb[j] = comb[j - 1] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

CachingPolicy brute_force_policy(const DemandModel& demand,
                                 const SubregionTable& subregions,
                                 const UtilityTable& table, int n_cache,
                                 double eta, double grid_step) {
  int nf = demand.n_files();
  int nb = static_cast<int>(subregions.by_cell.size());
  CachingPolicy best;
  best.n_cache = n_cache;
  best.c.assign(nf, std::vector<double>(nb, 0.0));
  double best_val = -std::numeric_limits<double>::infinity();

  if (eta == 0.0) {
    if (nf * nb > 8) {
      throw std::invalid_argument("brute_force_policy: instance too large");
    }
    int k = std::min(n_cache, nf);
    std::vector<std::vector<std::vector<int>>> choices(nb);
    std::vector<int> comb(k);
    std::iota(comb.begin(), comb.end(), 0);
    std::vector<std::vector<int>> all;
    do {
      all.push_back(comb);
    } while (next_combination(comb, nf));
    for (int b = 0; b < nb; ++b) choices[b] = all;

    std::vector<std::size_t> pick(nb, 0);
    CachingPolicy cand;
    cand.n_cache = n_cache;
    while (true) {
      cand.c.assign(nf, std::vector<double>(nb, 0.0));
      for (int b = 0; b < nb; ++b) {
        for (int f : choices[b][pick[b]]) cand.c[f][b] = 1.0;
      }
      double val = p0_objective(demand, subregions, table, cand, eta);
      if (val > best_val + 1e-15) {
        best_val = val;
        best = cand;
      }
      int b = nb - 1;
      while (b >= 0 && ++pick[b] == choices[b].size()) pick[b--] = 0;
      if (b < 0) break;
    }
    return best;
  }

  int steps = static_cast<int>(std::lround(1.0 / grid_step));
  if (steps < 1) throw std::invalid_argument("brute_force_policy: bad step");
  if (nf * std::log(steps + 1.0) > std::log(2e7)) {
    throw std::invalid_argument("brute_force_policy: instance too large");
  }

  // Budget-feasible grid columns for one BS, enumerated once and reused.
  std::vector<std::vector<double>> columns;
  std::vector<int> idx(nf, 0);
  while (true) {
    double load = 0.0;
    for (int f = 0; f < nf; ++f) load += static_cast<double>(idx[f]) / steps;
    if (load <= n_cache + 1e-9) {
      std::vector<double> col(nf);
      for (int f = 0; f < nf; ++f) col[f] = static_cast<double>(idx[f]) / steps;
      columns.push_back(std::move(col));
    }
    int v = nf - 1;
    while (v >= 0 && ++idx[v] > steps) idx[v--] = 0;
    if (v < 0) break;
  }
  double combos = std::pow(static_cast<double>(columns.size()), nb);
  if (combos > 6e6) {
    throw std::invalid_argument("brute_force_policy: instance too large");
  }

  std::vector<std::size_t> pick(nb, 0);
  CachingPolicy cand;
  cand.n_cache = n_cache;
  cand.c.assign(nf, std::vector<double>(nb, 0.0));
  while (true) {
    for (int b = 0; b < nb; ++b) {
      for (int f = 0; f < nf; ++f) cand.c[f][b] = columns[pick[b]][f];
    }
    double val = p0_objective(demand, subregions, table, cand, eta);
    if (val > best_val + 1e-15) {
      best_val = val;
      best = cand;
    }
    int b = nb - 1;
    while (b >= 0 && ++pick[b] == columns.size()) pick[b--] = 0;
    if (b < 0) break;
  }
  return best;
}

}  // namespace edgecache
