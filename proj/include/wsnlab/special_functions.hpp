#pragma once

#include <cmath>
#include <limits>

#include "wsnlab/errors.hpp"

namespace wsnlab::special {

namespace detail {

// Continued fraction for I_x(a, b), modified Lentz evaluation.
inline double beta_cf(double a, double b, double x, double rel_tol) {
  constexpr double tiny = 1e-300;
  constexpr int max_iter = 10000;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < rel_tol) return h;
  }
  throw NumericalError("incomplete beta continued fraction did not converge");
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].
inline double incomplete_beta(double a, double b, double x, double rel_tol = 1e-10) {
  if (!(a > 0.0) || !(b > 0.0)) throw NumericalError("incomplete_beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw NumericalError("incomplete_beta: x outside [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  // Use the symmetry relation where the fraction converges fastest.
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_cf(a, b, x, rel_tol) / a;
  return 1.0 - front * detail::beta_cf(b, a, 1.0 - x, rel_tol) / b;
}

// Two-sided tail P(|T| >= |t|) of Student's t with `dof` degrees of freedom:
// I_{dof/(dof+t^2)}(dof/2, 1/2).
inline double student_t_two_sided(double t, double dof) {
  if (!(dof > 0.0)) throw NumericalError("student_t: dof must be positive");
  if (std::isinf(t)) return 0.0;
  if (t == 0.0) return 1.0;
  const double x = dof / (dof + t * t);
  return incomplete_beta(dof / 2.0, 0.5, x);
}

// Student-t distribution function F(t; dof).
inline double student_t_cdf(double t, double dof) {
  double tail = 0.5 * student_t_two_sided(t, dof);
  return t >= 0.0 ? 1.0 - tail : tail;
}

}  // namespace wsnlab::special
