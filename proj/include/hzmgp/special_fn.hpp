#ifndef HZMGP_SPECIAL_FN_HPP
#define HZMGP_SPECIAL_FN_HPP

#include <cmath>
#include <limits>

namespace hzmgp {

/// e^{-1}, the left end of the principal-branch domain is -1/e.
inline constexpr double kInvE = 0.36787944117144232159552377016146087;

/// Slack accepted below -1/e before lambert_w0 reports a domain error.
inline constexpr double kBranchPointSlack = 1e-14;

/**
 * Principal branch W0 of the Lambert W function, the solution w >= -1
 * of w * e^w = x.
 *
 * Within 1e-8 of the branch point the series in p = sqrt(2(e x + 1)) is
 * used directly; elsewhere Halley iteration is run from an asymptotic
 * initial guess until |dw| <= 1e-14 (1 + |w|), at most 50 steps.
 *
 * Throws std::domain_error for x < -1/e - 1e-14 or non-finite x.
 */
double lambert_w0(double x);

/// dW0/dx = 1 / (e^W (1 + W)); equals 1 at x = 0. Throws std::domain_error
/// at or below the branch point where the derivative diverges.
double lambert_w0_derivative(double x);

/// log(1 - e^{-a}) for a > 0, two-branch stable form. Throws
/// std::domain_error for a <= 0.
double log1mexp(double a);

// Generic helpers below are written against unqualified exp/log/log1p/expm1
// so they resolve to the std:: overloads for double and to the Dual
// overloads found by ADL.

/// log(1 / (1 + e^{-x})) without overflow.
template <class T>
T log_sigmoid(const T& x) {
  using std::exp;
  using std::log1p;
  if (x >= 0.0) return -log1p(exp(-x));
  return x - log1p(exp(x));
}

/// 1 / (1 + e^{-x}) without overflow.
template <class T>
T sigmoid(const T& x) {
  using std::exp;
  if (x >= 0.0) return 1.0 / (1.0 + exp(-x));
  T e = exp(x);
  return e / (1.0 + e);
}

/// log(e^y - 1) for y > 0.
template <class T>
T log_expm1(const T& y) {
  using std::exp;
  using std::expm1;
  using std::log;
  using std::log1p;
  if (y > 1.0) return y + log1p(-exp(-y));
  return log(expm1(y));
}

/// log(e^{e^z} - 1); stays finite, with a finite derivative, when e^z underflows.
template <class T>
T log_expm1_exp(const T& z) {
  using std::exp;
  using std::log1p;
  if (z < -12.0) {
    const T m = exp(z);
    return z + log1p(m * (0.5 + m / 6.0));
  }
  return log_expm1(T(exp(z)));
}

/// log(e^a + e^b); a term whose value is -inf is dropped entirely so its
/// (undefined) derivative never contaminates the result.
template <class T>
T log_add_exp(const T& a, const T& b) {
  using std::exp;
  using std::log1p;
  constexpr double ninf = -std::numeric_limits<double>::infinity();
  if (a == ninf) return b;
  if (b == ninf) return a;
  if (a > b) return a + log1p(exp(b - a));
  return b + log1p(exp(a - b));
}

}  // namespace hzmgp

#endif  // HZMGP_SPECIAL_FN_HPP
