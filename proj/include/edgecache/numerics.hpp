#pragma once

#include <functional>
#include <stdexcept>

namespace edgecache {

// Exponential integral Ei(x) for x < 0.
//   Ei(x) = -\int_{-x}^{inf} e^{-t}/t dt
// Power series around 0 for |x| <= 6, Lentz continued fraction beyond.
// Absolute error <= 1e-10 over the supported range.
double exp_integral_ei(double x);

// e^y * E1(y) = -e^y * Ei(-y) for y > 0, stable for large y where the
// unscaled factors overflow/underflow (decays like 1/y).
double exp_e1_scaled(double y);

struct QuadResult {
  double value = 0.0;
  double error_estimate = 0.0;  // absolute
  bool converged = true;
  long evaluations = 0;
};

// Adaptive Simpson on [a, b]. Tolerance is absolute; subdivision stops when
// the local error estimate (Richardson) is below the share of tol assigned to
// the interval or max_depth is reached (converged flag cleared in that case).
QuadResult integrate_adaptive(const std::function<double(double)>& f, double a,
                              double b, double abs_tol, int max_depth = 40);

// Iterated 2-D integral over the triangle 0 <= y <= height,
// 0 <= x <= y/slope_div (right triangle with apex at the origin), i.e.
//   \int_0^H \int_0^{y/s} f(x, y) dx dy.
QuadResult integrate_triangle(const std::function<double(double, double)>& f,
                              double height, double slope_div, double abs_tol,
                              int max_depth = 24);

// Golden-section minimizer of a unimodal function on [lo, hi].
double golden_section_min(const std::function<double(double)>& f, double lo,
                          double hi, double tol, int max_iter = 200);

}  // namespace edgecache
