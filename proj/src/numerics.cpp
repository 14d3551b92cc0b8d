#include "edgecache/numerics.hpp"

#include <cmath>
#include <limits>

namespace edgecache {

namespace {

constexpr double kEulerGamma = 0.57721566490153286060651209;

// Ei(x) = gamma + ln|x| + sum_{k>=1} x^k / (k * k!), valid for x < 0 here.
double ei_series(double x) {
  double sum = 0.0;
  double term = 1.0;
  for (int k = 1; k <= 200; ++k) {
    term *= x / k;
    double add = term / k;
    sum += add;
    if (std::fabs(add) < 1e-18 * (1.0 + std::fabs(sum))) break;
  }
  return kEulerGamma + std::log(std::fabs(x)) + sum;
}

// e^y E1(y) for y > 0 via modified Lentz continued fraction:
//   E1(y) = e^{-y} / (y + 1/(1 + 1/(y + 2/(1 + 2/(y + ...)))))
double e1_continued_fraction_scaled(double y) {
  const double tiny = 1e-300;
  double b = y + 1.0;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 300; ++i) {
    double a = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (a * d + b);
    c = b + a / c;
    double delta = c * d;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-15) break;
  }
  return h;
}

struct SimpsonCtx {
  const std::function<double(double)>* f;
  int max_depth;
  long evals = 0;
  double err_acc = 0.0;
  bool converged = true;
};

double simpson_rec(SimpsonCtx& ctx, double a, double b, double fa, double fm,
                   double fb, double whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m);
  double rm = 0.5 * (m + b);
  double flm = (*ctx.f)(lm);
  double frm = (*ctx.f)(rm);
  ctx.evals += 2;
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (depth >= ctx.max_depth) {
    ctx.converged = false;
    ctx.err_acc += std::fabs(delta);
    return left + right + delta / 15.0;
  }
  if (std::fabs(delta) <= 15.0 * tol) {
    ctx.err_acc += std::fabs(delta) / 15.0;
    return left + right + delta / 15.0;
  }
  return simpson_rec(ctx, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
         simpson_rec(ctx, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
}

}  // namespace

double exp_integral_ei(double x) {
  if (!(x < 0.0)) {
    throw std::domain_error("exp_integral_ei: argument must be negative");
  }
  if (x >= -6.0) return ei_series(x);
  return -std::exp(x) * e1_continued_fraction_scaled(-x);
}

double exp_e1_scaled(double y) {
  if (!(y > 0.0)) {
    throw std::domain_error("exp_e1_scaled: argument must be positive");
  }
  if (y <= 6.0) return -std::exp(y) * ei_series(-y);
  return e1_continued_fraction_scaled(y);
}

QuadResult integrate_adaptive(const std::function<double(double)>& f, double a,
                              double b, double abs_tol, int max_depth) {
  QuadResult r;
  if (a == b) return r;
  SimpsonCtx ctx{&f, max_depth};
  double m = 0.5 * (a + b);
  double fa = f(a);
  double fm = f(m);
  double fb = f(b);
  ctx.evals = 3;
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  r.value = simpson_rec(ctx, a, b, fa, fm, fb, whole, abs_tol, 0);
  r.error_estimate = ctx.err_acc;
  r.converged = ctx.converged;
  r.evaluations = ctx.evals;
  return r;
}

QuadResult integrate_triangle(const std::function<double(double, double)>& f,
                              double height, double slope_div, double abs_tol,
                              int max_depth) {
  QuadResult outer_info;
  long evals = 0;
  double inner_err = 0.0;
  bool inner_ok = true;
  // Inner integrals get a tolerance proportional to their strip width so the
  // accumulated inner error stays below roughly half the total budget.
  auto outer = [&](double y) {
    double xmax = y / slope_div;
    if (xmax <= 0.0) return 0.0;
    double tol = 0.5 * abs_tol * (xmax / (0.5 * height * (height / slope_div)));
    if (tol <= 0.0 || !std::isfinite(tol)) tol = 0.5 * abs_tol;
    QuadResult inner = integrate_adaptive(
        [&](double x) { return f(x, y); }, 0.0, xmax, tol, max_depth);
    evals += inner.evaluations;
    inner_err += inner.error_estimate;
    inner_ok = inner_ok && inner.converged;
    return inner.value;
  };
  QuadResult res =
      integrate_adaptive(outer, 0.0, height, 0.5 * abs_tol, max_depth);
  res.evaluations += evals;
  res.error_estimate += inner_err;
  res.converged = res.converged && inner_ok;
  return res;
}

double golden_section_min(const std::function<double(double)>& f, double lo,
                          double hi, double tol, int max_iter) {
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);  // 0.618...
  double a = lo, b = hi;
  double x1 = b - phi * (b - a);
  double x2 = a + phi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int i = 0; i < max_iter && (b - a) > tol; ++i) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace edgecache
